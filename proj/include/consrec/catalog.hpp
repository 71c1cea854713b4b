#pragma once

#include <cstddef>
#include <string>

#include "consrec/types.hpp"

namespace consrec {

// Renders "id: <item_id> <name_1>: <value_1> ... <name_k>: <value_k>";
// the id segment is dropped when include_id is false.
std::string verbalize_item(const ItemRecord& item, bool include_id);

// Concatenates verbalized items newest-first, separated by "; ", keeping
// only the most recent max_items events.
std::string verbalize_history(const InteractionHistory& history,
                              const Catalog& catalog, bool include_id,
                              std::size_t max_items = 32);

std::string render_nip_instruction(const std::string& task_name,
                                   const std::string& history_text);

// JSON-lines: {"item_id": str, "attributes": [[name, value], ...]}.
Catalog load_catalog(const std::string& path);

}  // namespace consrec
