#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "consrec/catalog.hpp"
#include "consrec/errors.hpp"

using namespace consrec;

namespace {

ItemRecord item(std::string id,
                std::vector<std::pair<std::string, std::string>> attrs) {
  return {std::move(id), std::move(attrs)};
}

}  // namespace

TEST_CASE("verbalize_item renders the id and attribute segments") {
  auto it = item("i1", {{"title", "Lego Set"}});
  CHECK(verbalize_item(it, true) == "id: i1 title: Lego Set");
  CHECK(verbalize_item(it, false) == "title: Lego Set");
}

TEST_CASE("verbalize_item with no attributes") {
  CHECK(verbalize_item(item("x", {}), true) == "id: x");
  CHECK(verbalize_item(item("x", {}), false) == "");
}

TEST_CASE("verbalize_item keeps attribute order and names verbatim") {
  auto it = item("a", {{"Brand", "Acme"}, {"color", "red"}});
  CHECK(verbalize_item(it, false) == "Brand: Acme color: red");
}

TEST_CASE("verbalize_history reverses chronology and joins with '; '") {
  Catalog cat;
  cat.emplace("i1", item("i1", {{"title", "a"}}));
  cat.emplace("i2", item("i2", {{"title", "b"}}));
  InteractionHistory h{"u", {{"i1", 1}, {"i2", 2}}};
  CHECK(verbalize_history(h, cat, false) == "title: b; title: a");
}

TEST_CASE("verbalize_history of one item has no separator") {
  Catalog cat;
  cat.emplace("i1", item("i1", {{"title", "a"}}));
  InteractionHistory h{"u", {{"i1", 1}}};
  CHECK(verbalize_history(h, cat, false) == "title: a");
}

TEST_CASE("verbalize_history truncates to the most recent max_items") {
  Catalog cat;
  for (int i = 1; i <= 5; ++i) {
    std::string id = "i" + std::to_string(i);
    cat.emplace(id, item(id, {{"t", std::to_string(i)}}));
  }
  InteractionHistory h{"u", {{"i1", 1}, {"i2", 2}, {"i3", 3}, {"i4", 4}, {"i5", 5}}};
  // Hand-enumerated: 3 most recent, newest first.
  CHECK(verbalize_history(h, cat, false, 3) == "t: 5; t: 4; t: 3");
}

TEST_CASE("verbalize_history throws on unresolvable item") {
  Catalog cat;
  InteractionHistory h{"u", {{"ghost", 1}}};
  CHECK_THROWS_AS(verbalize_history(h, cat, false), UnknownItem);
}

TEST_CASE("verbalize_history contains each retained item exactly once") {
  Catalog cat;
  for (int i = 1; i <= 4; ++i) {
    std::string id = "i" + std::to_string(i);
    cat.emplace(id, item(id, {{"t", "v" + std::to_string(i)}}));
  }
  InteractionHistory h{"u", {{"i1", 1}, {"i2", 2}, {"i3", 3}, {"i4", 4}}};
  auto text = verbalize_history(h, cat, true);
  for (int i = 1; i <= 4; ++i) {
    auto piece = verbalize_item(cat.at("i" + std::to_string(i)), true);
    auto first = text.find(piece);
    REQUIRE(first != std::string::npos);
    CHECK(text.find(piece, first + 1) == std::string::npos);
  }
}

TEST_CASE("render_nip_instruction matches the template exactly") {
  CHECK(render_nip_instruction("Beauty", "title: a") ==
        "This is Beauty dataset. Here is the visit history list of the user: "
        "title: a, recommend next item");
  CHECK(render_nip_instruction("", "") ==
        "This is  dataset. Here is the visit history list of the user: , "
        "recommend next item");
  CHECK(render_nip_instruction("Yelp", "x") == render_nip_instruction("Yelp", "x"));
}

TEST_CASE("load_catalog parses JSONL, ignores unknown keys") {
  std::string path = "catalog_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"item_id":"a","attributes":[["title","T"]],"extra":1})" << "\n";
    out << R"({"item_id":"b","attributes":[]})" << "\n";
  }
  auto cat = load_catalog(path);
  REQUIRE(cat.size() == 2);
  CHECK(cat.at("a").attributes.size() == 1);
  CHECK(cat.at("b").attributes.empty());
}

TEST_CASE("load_catalog rejects duplicates and bad JSON with line numbers") {
  std::string path = "catalog_bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"item_id":"a","attributes":[]})" << "\n";
    out << "not json\n";
  }
  try {
    load_catalog(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
