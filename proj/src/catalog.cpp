#include "consrec/catalog.hpp"

#include <fstream>
#include <json.hpp>

#include "consrec/errors.hpp"

namespace consrec {

std::string verbalize_item(const ItemRecord& item, bool include_id) {
  std::string out;
  if (include_id) {
    out += "id: ";
    out += item.item_id;
  }
  for (const auto& [name, value] : item.attributes) {
    if (!out.empty()) out += ' ';
    out += name;
    out += ": ";
    out += value;
  }
  return out;
}

std::string verbalize_history(const InteractionHistory& history,
                              const Catalog& catalog, bool include_id,
                              std::size_t max_items) {
  std::string out;
  std::size_t emitted = 0;
  for (auto it = history.events.rbegin();
       it != history.events.rend() && emitted < max_items; ++it, ++emitted) {
    auto found = catalog.find(it->item_id);
    if (found == catalog.end()) throw UnknownItem(it->item_id);
    if (emitted > 0) out += "; ";
    out += verbalize_item(found->second, include_id);
  }
  return out;
}

std::string render_nip_instruction(const std::string& task_name,
                                   const std::string& history_text) {
  return "This is " + task_name +
         " dataset. Here is the visit history list of the user: " +
         history_text + ", recommend next item";
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open catalog file: " + path);
  Catalog catalog;
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
    ItemRecord rec;
    try {
      rec.item_id = j.at("item_id").get<std::string>();
      if (j.contains("attributes")) {
        for (const auto& pair : j.at("attributes")) {
          rec.attributes.emplace_back(pair.at(0).get<std::string>(),
                                      pair.at(1).get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
    if (rec.item_id.empty()) throw ParseError(path, line_no, "empty item_id");
    if (!catalog.emplace(rec.item_id, rec).second) {
      throw ParseError(path, line_no, "duplicate item_id: " + rec.item_id);
    }
  }
  return catalog;
}

}  // namespace consrec
