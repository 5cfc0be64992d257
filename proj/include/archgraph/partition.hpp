#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "archgraph/cdx_filter.hpp"

namespace archgraph {

// Half-open range of positions in PartitionPlan::order.
struct RecordRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const RecordRange&) const = default;
};

struct Partition {
  std::size_t index = 0;
  std::vector<RecordRange> ranges;  // one per WARC file, ascending
  std::size_t record_count = 0;
};

struct PartitionPlan {
  // Indices into the extraction list, stably sorted by warc_file.
  std::vector<std::size_t> order;
  std::vector<Partition> partitions;
  std::map<std::string, std::size_t> file_partition;

  // Extraction-list indices handled by partition p, in plan order.
  std::vector<std::size_t> records_of(std::size_t p) const;
  std::size_t record_count() const { return order.size(); }
};

// Groups records by WARC file and assigns whole groups greedily: groups in
// descending size (ties by file name) each go to the currently lightest
// partition (ties to the lowest index). Throws std::invalid_argument if k == 0.
PartitionPlan plan_partitions(std::span<const CdxRecord> records, std::size_t k);

}  // namespace archgraph
