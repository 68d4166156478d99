import pytest

from colfuse import loader, schema
from colfuse.bench import datagen


class Dataset:
    """Generated input plus one loaded database and sorted raw tables."""

    def __init__(self, schema_name, sf, raw_dir, db_dir, manifest):
        self.schema_name = schema_name
        self.sf = sf
        self.raw_dir = raw_dir
        self.db_dir = db_dir
        self.manifest = manifest
        self.schema = schema.get_schema(schema_name)
        raw = loader.load_tables(raw_dir, self.schema)
        self.sorted_tables = {
            t.name: loader.sort_cluster(raw[t.name], t.cluster_key)
            for t in self.schema.tables
        }


def _make_dataset(tmp_root, schema_name, sf, page_size=1 << 20, seed=11,
                  compress=True, devices=2):
    raw_dir = tmp_root / ("raw-%s-%s" % (schema_name, sf))
    if not raw_dir.exists():
        datagen.generate(schema_name, str(raw_dir), sf=sf, seed=seed)
    db_dir = tmp_root / ("db-%s-%s-%d-%s" % (schema_name, sf, page_size, compress))
    sch = schema.get_schema(schema_name)
    plan = loader.LoadPlan(sch, page_size=page_size, device_count=devices,
                           compress=compress)
    manifest = loader.load_database(str(raw_dir), plan, str(db_dir))
    return Dataset(schema_name, sf, str(raw_dir), str(db_dir), manifest)


@pytest.fixture(scope="session")
def data_root(tmp_path_factory):
    return tmp_path_factory.mktemp("datasets")


@pytest.fixture(scope="session")
def tpch_tiny(data_root):
    return _make_dataset(data_root, "tpch", 0.001)


@pytest.fixture(scope="session")
def ssb_tiny(data_root):
    return _make_dataset(data_root, "ssb", 0.001)


@pytest.fixture(scope="session")
def tpch_small(data_root):
    return _make_dataset(data_root, "tpch", 0.01)


@pytest.fixture(scope="session")
def ssb_small(data_root):
    return _make_dataset(data_root, "ssb", 0.01)


def make_dataset(tmp_root, schema_name, sf, **kw):
    return _make_dataset(tmp_root, schema_name, sf, **kw)
