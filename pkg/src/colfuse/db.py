"""Read-side handle for a loaded database directory: manifest, schema,
placements, RID indexes, zone maps, and the device array."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from . import catalog, schema as schema_mod
from .errors import ColfuseError
from .iosim import DeviceArray


@dataclass(frozen=True)
class ColumnInfo:
    column_id: str
    table: str
    name: str
    col_type: object
    column_ord: int
    placement: catalog.ColumnPlacement
    rid_index: catalog.RidIndex
    offsets: tuple
    sizes: tuple
    zone_map: catalog.ZoneMap | None


class Database:
    """One loaded database directory, opened read-only."""

    def __init__(self, root):
        self.root = root
        with open(os.path.join(root, "manifest.json")) as f:
            self.manifest = json.load(f)
        self.schema = schema_mod.schema_from_dict(self.manifest["schema"])
        self.page_size = self.manifest["page_size"]
        self.device_count = self.manifest["device_count"]
        self.compress = self.manifest["compress"]
        self.devices = DeviceArray(self.device_count, os.path.join(root, "devices"))
        meta = os.path.join(root, "meta")
        self.columns = {}
        for table in self.schema.tables:
            attr_ids = self.manifest["tables"][table.name]["attr_ids"]
            for col in table.columns:
                cid = "%s.%s" % (table.name, col.name)
                entry = self.manifest["columns"][cid]
                base = os.path.join(meta, cid)
                offsets = tuple(catalog.read_u64_array(base + ".offsets"))
                sizes = tuple(catalog.read_u32_array(base + ".sizes"))
                rid_prefix = tuple(catalog.read_u64_array(base + ".rids"))
                first = entry["first_page_id"]
                page_ids = tuple(range(first, first + entry["page_count"]))
                first_rids = tuple(
                    rid_prefix[i - 1] if i else 0 for i in range(len(page_ids))
                )
                zm = None
                if attr_ids and os.path.exists(base + ".zonemap"):
                    zm = catalog.read_zone_map(base + ".zonemap")
                self.columns[cid] = ColumnInfo(
                    cid, table.name, col.name, col.col_type, entry["column_ord"],
                    catalog.ColumnPlacement(cid, page_ids, first_rids),
                    catalog.RidIndex(rid_prefix), offsets, sizes, zm,
                )
        self.dictionary = catalog.Dictionary(
            [c.placement for c in self.columns.values()]
        )

    def close(self):
        self.devices.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def column(self, table, name) -> ColumnInfo:
        try:
            return self.columns["%s.%s" % (table, name)]
        except KeyError:
            raise ColfuseError("unknown column %s.%s" % (table, name)) from None

    def table_rows(self, table):
        return self.manifest["tables"][table]["row_count"]

    def attr_id(self, table, attr_name):
        ids = self.manifest["tables"][table]["attr_ids"]
        return ids.get(attr_name)

    def page_location(self, info: ColumnInfo, page_id):
        """(device, offset, length) for one page of a column."""
        ordinal = info.placement.ordinal(page_id)
        if not 0 <= ordinal < len(info.placement.page_ids):
            raise ColfuseError("page %d not in column %s" % (page_id, info.column_id))
        return page_id % self.device_count, info.offsets[ordinal], info.sizes[ordinal]
