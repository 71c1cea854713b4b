#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace consrec {

struct ItemRecord {
  std::string item_id;
  // Attribute order is preserved as listed in the source file.
  std::vector<std::pair<std::string, std::string>> attributes;
};

using Catalog = std::map<std::string, ItemRecord>;

struct Event {
  std::string item_id;
  std::int64_t timestamp = 0;
};

struct InteractionHistory {
  std::string user_id;
  // Sorted non-decreasing by timestamp, ties broken by input order.
  std::vector<Event> events;
};

struct Dataset {
  Catalog catalog;
  std::map<std::string, InteractionHistory> histories;
};

enum class SplitTag { kTrain, kDev, kTest };

inline const char* split_tag_name(SplitTag t) {
  switch (t) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kDev: return "dev";
    case SplitTag::kTest: return "test";
  }
  return "?";
}

struct SplitExample {
  std::string user_id;
  std::vector<std::string> context;
  std::string target;
  SplitTag split = SplitTag::kTrain;
};

}  // namespace consrec
