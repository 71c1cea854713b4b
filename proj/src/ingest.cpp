#include "consrec/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>

#include "consrec/catalog.hpp"
#include "consrec/errors.hpp"

namespace consrec {

Dataset load_interactions(const std::string& log_path,
                          const std::string& catalog_path) {
  Dataset ds;
  ds.catalog = load_catalog(catalog_path);

  std::ifstream in(log_path);
  if (!in) throw DataError("cannot open interaction log: " + log_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(log_path, line_no, e.what());
    }
    std::string user_id, item_id;
    std::int64_t ts;
    try {
      user_id = j.at("user_id").get<std::string>();
      item_id = j.at("item_id").get<std::string>();
      ts = j.at("timestamp").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(log_path, line_no, e.what());
    }
    if (!ds.catalog.contains(item_id)) throw UnknownItem(item_id);
    auto& hist = ds.histories[user_id];
    hist.user_id = user_id;
    hist.events.push_back({item_id, ts});
  }
  for (auto& [_, hist] : ds.histories) {
    std::stable_sort(hist.events.begin(), hist.events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return ds;
}

Dataset core_filter(const Dataset& ds, std::size_t min_count) {
  Dataset out = ds;
  for (;;) {
    std::map<std::string, std::size_t> item_counts;
    for (const auto& [_, hist] : out.histories) {
      for (const auto& ev : hist.events) ++item_counts[ev.item_id];
    }
    bool changed = false;
    for (auto it = out.histories.begin(); it != out.histories.end();) {
      auto& events = it->second.events;
      std::size_t before = events.size();
      std::erase_if(events, [&](const Event& ev) {
        return item_counts[ev.item_id] < min_count;
      });
      if (events.size() != before) changed = true;
      if (events.size() < min_count) {
        it = out.histories.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
    if (!changed) break;
  }
  if (out.histories.empty()) throw DataError("core_filter: empty dataset");
  // Drop catalog entries that no longer appear.
  std::map<std::string, std::size_t> survivors;
  for (const auto& [_, hist] : out.histories) {
    for (const auto& ev : hist.events) ++survivors[ev.item_id];
  }
  for (auto it = out.catalog.begin(); it != out.catalog.end();) {
    if (!survivors.contains(it->first)) {
      it = out.catalog.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

std::vector<SplitExample> leave_one_out(const Dataset& ds) {
  std::vector<SplitExample> out;
  for (const auto& [user_id, hist] : ds.histories) {
    std::size_t t = hist.events.size();
    if (t < 3) throw DataError("history too short for user " + user_id);
    auto context_up_to = [&](std::size_t end) {
      std::vector<std::string> ctx;
      ctx.reserve(end);
      for (std::size_t i = 0; i < end; ++i) ctx.push_back(hist.events[i].item_id);
      return ctx;
    };
    // Train targets are positions 2..t-2 (1-based), each with context before it.
    for (std::size_t i = 1; i + 2 < t; ++i) {
      out.push_back({user_id, context_up_to(i), hist.events[i].item_id,
                     SplitTag::kTrain});
    }
    out.push_back({user_id, context_up_to(t - 2), hist.events[t - 2].item_id,
                   SplitTag::kDev});
    out.push_back({user_id, context_up_to(t - 1), hist.events[t - 1].item_id,
                   SplitTag::kTest});
  }
  return out;
}

void write_splits(const std::vector<SplitExample>& splits,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write splits: " + path);
  for (const auto& ex : splits) {
    nlohmann::json j;
    j["user_id"] = ex.user_id;
    j["context"] = ex.context;
    j["target"] = ex.target;
    j["split"] = split_tag_name(ex.split);
    out << j.dump() << '\n';
  }
}

std::vector<SplitExample> read_splits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open splits: " + path);
  std::vector<SplitExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
    SplitExample ex;
    ex.user_id = j.at("user_id").get<std::string>();
    ex.context = j.at("context").get<std::vector<std::string>>();
    ex.target = j.at("target").get<std::string>();
    std::string tag = j.at("split").get<std::string>();
    if (tag == "train") ex.split = SplitTag::kTrain;
    else if (tag == "dev") ex.split = SplitTag::kDev;
    else if (tag == "test") ex.split = SplitTag::kTest;
    else throw ParseError(path, line_no, "bad split tag: " + tag);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace consrec
