#pragma once

#include <string>
#include <vector>

#include "consrec/types.hpp"

namespace consrec {

// Interaction log is JSON-lines: {"user_id": str, "item_id": str,
// "timestamp": int}. Events are grouped per user and sorted by timestamp
// (stable, so ties keep file order). Duplicate rows are kept.
Dataset load_interactions(const std::string& log_path,
                          const std::string& catalog_path);

// Iteratively removes users and items with fewer than min_count events
// until a fixed point. Throws DataError when nothing survives.
Dataset core_filter(const Dataset& ds, std::size_t min_count);

// Per user: test target is the last event, dev the second-to-last, train
// targets every earlier position with at least one context event.
// Throws DataError("history too short ...") for histories shorter than 3.
std::vector<SplitExample> leave_one_out(const Dataset& ds);

void write_splits(const std::vector<SplitExample>& splits,
                  const std::string& path);
std::vector<SplitExample> read_splits(const std::string& path);

}  // namespace consrec
