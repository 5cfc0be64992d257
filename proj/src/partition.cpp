#include "archgraph/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace archgraph {

std::vector<std::size_t> PartitionPlan::records_of(std::size_t p) const {
  std::vector<std::size_t> out;
  for (const RecordRange& r : partitions.at(p).ranges) {
    out.insert(out.end(), order.begin() + static_cast<std::ptrdiff_t>(r.begin),
               order.begin() + static_cast<std::ptrdiff_t>(r.end));
  }
  return out;
}

PartitionPlan plan_partitions(std::span<const CdxRecord> records, std::size_t k) {
  if (k == 0) throw std::invalid_argument("partition count must be at least 1");
  PartitionPlan plan;
  plan.order.resize(records.size());
  std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
  std::stable_sort(plan.order.begin(), plan.order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].warc_file < records[b].warc_file; });

  struct Group {
    std::string file;
    RecordRange range;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    const std::string& file = records[plan.order[i]].warc_file;
    if (groups.empty() || groups.back().file != file) groups.push_back({file, {i, i}});
    groups.back().range.end = i + 1;
  }
  std::vector<const Group*> by_size;
  for (const auto& g : groups) by_size.push_back(&g);
  std::sort(by_size.begin(), by_size.end(), [](const Group* a, const Group* b) {
    if (a->range.size() != b->range.size()) return a->range.size() > b->range.size();
    return a->file < b->file;
  });

  plan.partitions.resize(k);
  for (std::size_t p = 0; p < k; ++p) plan.partitions[p].index = p;
  for (const Group* g : by_size) {
    auto lightest = std::min_element(plan.partitions.begin(), plan.partitions.end(),
                                     [](const Partition& a, const Partition& b) { return a.record_count < b.record_count; });
    lightest->ranges.push_back(g->range);
    lightest->record_count += g->range.size();
    plan.file_partition[g->file] = lightest->index;
  }
  for (auto& p : plan.partitions) {
    std::sort(p.ranges.begin(), p.ranges.end(), [](const RecordRange& a, const RecordRange& b) { return a.begin < b.begin; });
  }
  return plan;
}

}  // namespace archgraph
