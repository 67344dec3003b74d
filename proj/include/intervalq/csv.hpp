#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "intervalq/interval.hpp"

namespace intervalq {

// Column-name schema for interval CSV files. Infinite endpoints use the
// sentinels "-inf" and "+inf".
struct CsvSchema {
  std::string lower = "lower";
  std::string upper = "upper";
  std::vector<std::string> covariates;
  // When set, malformed rows are counted and dropped instead of raising.
  bool skip_malformed = false;
};

struct CsvLoadResult {
  IntervalDataset data;
  std::size_t skipped = 0;
};

CsvLoadResult load_csv(const std::string& path, const CsvSchema& schema = {});

// Writes with 17 significant digits so that load(write(ds)) is exact.
void write_csv(const std::string& path, const IntervalDataset& ds, const CsvSchema& schema = {});

}  // namespace intervalq
