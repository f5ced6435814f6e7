#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "builder.hpp"
#include "cfisurface/error.hpp"
#include "cfisurface/generator.hpp"
#include "cfisurface/hierarchy.hpp"

using namespace cfisurface;
using testing::Builder;
using testing::fn;
using testing::pure;
using testing::thunk;

namespace {

using Edges = std::vector<std::pair<std::string, std::string>>;
using Ids = std::vector<std::string>;

// Plain BFS over the bases lists read backwards.
Ids bfs_descendants(const ProgramFacts& f, const std::string& root) {
  std::set<std::string> seen{root};
  std::deque<std::string> queue{root};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    for (const auto& c : f.classes()) {
      for (const auto& b : c.bases) {
        if (b.class_id == cur && seen.insert(c.id).second) queue.push_back(c.id);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

// Parent of a table: the table whose path is this path without its head.
std::optional<std::string> path_parent(const ProgramFacts& f, const VTableRecord& t) {
  if (t.base_path.size() < 2) return std::nullopt;
  const Ids tail(t.base_path.begin() + 1, t.base_path.end());
  for (const auto& u : f.vtables()) {
    if (u.base_path == tail) return u.id;
  }
  return std::nullopt;
}

Ids bfs_table_descendants(const ProgramFacts& f, const std::string& root) {
  std::set<std::string> seen{root};
  std::deque<std::string> queue{root};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    for (const auto& t : f.vtables()) {
      if (path_parent(f, t) == cur && seen.insert(t.id).second) queue.push_back(t.id);
    }
  }
  return {seen.begin(), seen.end()};
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::vector<Ids> union_find_islands(const ProgramFacts& f) {
  const auto tables = f.vtables();
  UnionFind uf(tables.size());
  std::map<std::string, std::size_t> first_of_class;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (auto p = path_parent(f, tables[i])) uf.join(i, *f.vtable_index(*p));
    auto [it, inserted] = first_of_class.emplace(tables[i].owning_class, i);
    if (!inserted) uf.join(i, it->second);
  }
  std::map<std::size_t, Ids> groups;
  for (std::size_t i = 0; i < tables.size(); ++i) groups[uf.find(i)].push_back(tables[i].id);
  std::vector<Ids> out;
  for (auto& [_, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ProgramFacts chain(int n) {
  Builder b;
  std::string prev;
  Ids path;
  for (int i = 0; i < n; ++i) {
    const std::string c = "C" + std::to_string(i);
    b.cls(c, prev.empty() ? Ids{} : Ids{prev});
    b.method(c + "::f", "f", c);
    path.insert(path.begin(), c);
    b.vtable("V" + c, c, 0, path, {fn(c + "::f")});
    prev = c;
  }
  return b.build();
}

}  // namespace

TEST_CASE("class hierarchy edges run base to derived") {
  Builder b;
  b.cls("A", {}, false).cls("B", {"A"}, false).cls("C", {"A"}, false);
  const auto facts = b.build();
  const auto ch = build_class_hierarchy(facts);
  CHECK(ch.edges() == Edges{{"A", "B"}, {"A", "C"}});

  Builder iso;
  iso.cls("X", {}, false).cls("Y", {}, false).cls("Z", {}, false);
  const auto iso_facts = iso.build();
  const auto ih = build_class_hierarchy(iso_facts);
  CHECK(ih.size() == 3);
  CHECK(ih.edges().empty());
}

TEST_CASE("class sub-hierarchies in a diamond") {
  Builder b;
  b.cls("A", {}, false).cls("B", {"A"}, false).cls("C", {"A"}, false).cls("D", {"B", "C"}, false);
  const auto f = b.build();
  const auto ch = build_class_hierarchy(f);
  CHECK(class_sub_hierarchy(ch, "A").members == Ids{"A", "B", "C", "D"});
  CHECK(class_sub_hierarchy(ch, "D").members == Ids{"D"});
  CHECK(class_sub_hierarchy(ch, "B").members == Ids{"B", "D"});
  CHECK_THROWS_AS(class_sub_hierarchy(ch, "nope"), std::out_of_range);
}

TEST_CASE("vtable hierarchy links overriding tables") {
  Builder b;
  b.cls("A").cls("B", {"A"}).method("A::f", "f", "A").method("B::f", "f", "B");
  b.vtable("VA", "A", 0, {"A"}, {fn("A::f")}).vtable("VB", "B", 0, {"B", "A"}, {fn("B::f")});
  const auto facts = b.build();
  const auto vh = build_vtable_hierarchy(facts);
  CHECK(vh.edges() == Edges{{"VA", "VB"}});
  CHECK(vh.island_count() == 1);
  CHECK(vh.id(vh.root(*vh.node("VB"))) == "VA");

  Builder u;
  u.cls("A").cls("B").method("A::f", "f", "A").method("B::f", "f", "B");
  u.vtable("VA", "A", 0, {"A"}, {fn("A::f")}).vtable("VB", "B", 0, {"B"}, {fn("B::f")});
  const auto unrelated = u.build();
  CHECK(find_islands(build_vtable_hierarchy(unrelated)) == std::vector<Ids>{{"VA"}, {"VB"}});
}

TEST_CASE("multiple inheritance splits a class across two chains") {
  const auto f = testing::multiple_inheritance();
  const auto vh = build_vtable_hierarchy(f);
  CHECK(vh.edges() == Edges{{"VA", "VD0"}, {"VB", "VD1"}});
  CHECK(vh.edges() == Edges{{*path_parent(f, *f.find_vtable("VD0")), "VD0"},
                            {*path_parent(f, *f.find_vtable("VD1")), "VD1"}});
  CHECK(vtable_sub_hierarchy(vh, "VA").members == bfs_table_descendants(f, "VA"));
  CHECK(vtable_sub_hierarchy(vh, "VA").members == Ids{"VA", "VD0"});
  CHECK(vtable_sub_hierarchy(vh, "VB").members == Ids{"VB", "VD1"});
  CHECK(vtable_set(f, "D") == Ids{"VD0", "VD1"});
  CHECK(vtable_set(f, "A") == Ids{"VA"});
  CHECK(find_islands(vh) == union_find_islands(f));
}

TEST_CASE("islands of chains") {
  const auto three = chain(3);
  CHECK(find_islands(build_vtable_hierarchy(three)).size() == 1);
  Builder b;
  b.cls("A").cls("B", {"A"}).cls("X").cls("Y", {"X"});
  for (const char* c : {"A", "B", "X", "Y"}) b.method(std::string(c) + "::f", "f", c);
  b.vtable("VA", "A", 0, {"A"}, {fn("A::f")}).vtable("VB", "B", 0, {"B", "A"}, {fn("B::f")});
  b.vtable("VX", "X", 0, {"X"}, {fn("X::f")}).vtable("VY", "Y", 0, {"Y", "X"}, {fn("Y::f")});
  const auto two = b.build();
  CHECK(find_islands(build_vtable_hierarchy(two)) == std::vector<Ids>{{"VA", "VB"}, {"VX", "VY"}});
}

TEST_CASE("vtable_set of a non-virtual class is empty") {
  Builder b;
  b.cls("P", {}, false);
  CHECK(vtable_set(b.build(), "P").empty());
}

TEST_CASE("resolve_entry follows thunks and skips pure slots") {
  Builder b;
  b.cls("A").cls("B").cls("D", {"A", "B"});
  b.method("A::f", "f", "A").pure_method("A::p", "p", "A").method("B::g", "g", "B").method("D::g", "g", "D");
  b.vtable("VA", "A", 0, {"A"}, {fn("A::f"), pure()});
  b.vtable("VB", "B", 0, {"B"}, {fn("B::g")});
  b.vtable("VD0", "D", 0, {"D", "A"}, {fn("A::f"), pure(), fn("D::g")});
  b.vtable("VD1", "D", 1, {"D", "B"}, {testing::offset(), thunk("D::g")});
  const auto f = b.build();
  REQUIRE(validate_facts(f).empty());
  CHECK(resolve_entry(f, "VA", 0) == "A::f");
  CHECK(resolve_entry(f, "VA", 1) == std::nullopt);
  CHECK(resolve_entry(f, "VD1", 0) == "D::g");
  CHECK_THROWS_AS(resolve_entry(f, "VA", 2), IndexOutOfRangeError);
}

TEST_CASE("hierarchies of random corpora match BFS and union-find") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 60; ++i) {
    const auto f = generate_corpus({.seed = rng(),
                                    .n_classes = 5 + static_cast<std::uint32_t>(rng() % 40),
                                    .n_callsites = 10,
                                    .max_bases = 3,
                                    .p_extra_base = 0.4});
    const auto ch = build_class_hierarchy(f);
    const auto vh = build_vtable_hierarchy(f);
    for (const auto& c : f.classes()) {
      CHECK(class_sub_hierarchy(ch, c.id).members == bfs_descendants(f, c.id));
    }
    for (const auto& t : f.vtables()) {
      const auto sub = vtable_sub_hierarchy(vh, t.id);
      CHECK(sub.members == bfs_table_descendants(f, t.id));
      // Nested roots give nested sub-hierarchies.
      for (const auto& m : sub.members) {
        const auto inner = vtable_sub_hierarchy(vh, m).members;
        CHECK(std::includes(sub.members.begin(), sub.members.end(), inner.begin(), inner.end()));
      }
    }
    for (const auto& [parent, child] : vh.edges()) {
      const auto& owner = f.find_vtable(child)->owning_class;
      const auto& bases = f.find_class(owner)->bases;
      CHECK(std::any_of(bases.begin(), bases.end(), [&](const BaseSpec& b) {
        return b.class_id == f.find_vtable(parent)->owning_class;
      }));
    }
    CHECK(find_islands(vh) == union_find_islands(f));
    for (const auto& cs : f.callsites()) {
      if (!cs.is_virtual()) continue;
      const auto set = vtable_set(f, *cs.static_class);
      REQUIRE(*cs.table_order < set.size());
      CHECK_NOTHROW(resolve_entry(f, set[*cs.table_order], *cs.entry_index));
    }
  }
}
