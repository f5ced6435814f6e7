#include "cfisurface/facts_io.hpp"

#include <initializer_list>
#include <json.hpp>

#include "cfisurface/error.hpp"

namespace cfisurface {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the 1-based count of bytes read so far.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, column] = line_column(text, at);
    std::string what = e.what();
    if (auto pos = what.rfind(": "); pos != std::string::npos) what = what.substr(pos + 2);
    throw FactsSyntaxError(what, line, column);
  }
}

/// Typed access to one JSON object with unknown-key rejection.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (auto k : keys) known = known || key == k;
      if (!known) throw FactsSchemaError(path_, "unknown key '" + key + "'");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) const {
    if (!node_.contains(key)) fail(std::string("missing key '") + key + "'");
    return node_.at(key);
  }

  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::optional<std::string> optional_string(const char* key) const {
    if (!has(key) || node_.at(key).is_null()) return std::nullopt;
    return string(key);
  }
  bool boolean(const char* key, std::optional<bool> fallback = std::nullopt) const {
    if (!has(key) && fallback) return *fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail(std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
  }
  std::uint32_t uint(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffu) {
      fail(std::string("'") + key + "' must be a non-negative 32-bit integer");
    }
    return v.get<std::uint32_t>();
  }
  std::optional<std::uint32_t> optional_uint(const char* key) const {
    if (!has(key) || node_.at(key).is_null()) return std::nullopt;
    return uint(key);
  }
  const json& array(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(std::string("'") + key + "' must be an array");
    return v;
  }
  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = array(key);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(std::string("'") + key + "' must hold strings");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  std::string child(const char* key, std::size_t i) const {
    return path_ + "." + key + "[" + std::to_string(i) + "]";
  }
  std::string child(const char* key) const { return path_ + "." + key; }

  [[noreturn]] void fail(const std::string& message) const { throw FactsSchemaError(path_, message); }

 private:
  const json& node_;
  std::string path_;
};

SourceLoc read_loc(const Reader& parent, const char* key) {
  if (!parent.has(key)) return {};
  Reader r(parent.at(key), parent.child(key));
  r.allow_only({"file", "line", "column"});
  return {r.string("file"), r.uint("line"), r.uint("column")};
}

ParamList read_params(const Reader& r, const char* key) {
  try {
    return parse_param_list(r.strings(key));
  } catch (const TypeParseError& e) {
    r.fail(std::string("'") + key + "': " + e.what());
  }
}

TypeExpr read_type(const Reader& r, const char* key) {
  try {
    return parse_type(r.string(key));
  } catch (const TypeParseError& e) {
    r.fail(std::string("'") + key + "': " + e.what());
  }
}

ClassRecord read_class(const Reader& r) {
  r.allow_only({"id", "name", "bases", "is_virtual_class"});
  ClassRecord c;
  c.id = r.string("id");
  c.name = r.string("name");
  c.is_virtual_class = r.boolean("is_virtual_class", false);
  if (r.has("bases")) {
    const json& bases = r.array("bases");
    for (std::size_t i = 0; i < bases.size(); ++i) {
      Reader b(bases[i], r.child("bases", i));
      b.allow_only({"id", "virtual"});
      c.bases.push_back({b.string("id"), b.boolean("virtual", false)});
    }
  }
  return c;
}

FunctionRecord read_function(const Reader& r) {
  r.allow_only({"id", "name", "owning_class", "params", "return", "virtual", "pure_virtual", "loc",
                "direct_callers"});
  FunctionRecord f;
  f.id = r.string("id");
  f.name = r.string("name");
  f.owning_class = r.optional_string("owning_class");
  auto params = read_params(r, "params");
  f.params = std::move(params.params);
  f.is_variadic = params.is_variadic;
  f.return_type = read_type(r, "return");
  f.is_virtual = r.boolean("virtual", false);
  f.is_pure_virtual = r.boolean("pure_virtual", false);
  f.source_loc = read_loc(r, "loc");
  f.direct_callers = r.strings("direct_callers");
  return f;
}

EntryKind read_entry_kind(const Reader& r) {
  const std::string kind = r.string("kind");
  if (kind == "function") return EntryKind::kFunction;
  if (kind == "thunk") return EntryKind::kThunk;
  if (kind == "offset") return EntryKind::kOffset;
  if (kind == "pure") return EntryKind::kPure;
  r.fail("unknown entry kind '" + kind + "'");
}

VTableRecord read_vtable(const Reader& r) {
  r.allow_only({"id", "owning_class", "order", "base_path", "entries"});
  VTableRecord t;
  t.id = r.string("id");
  t.owning_class = r.string("owning_class");
  t.order = r.uint("order");
  t.base_path = r.strings("base_path");
  if (r.has("entries")) {
    const json& entries = r.array("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Reader e(entries[i], r.child("entries", i));
      e.allow_only({"kind", "function", "index"});
      t.entries.push_back({read_entry_kind(e), e.optional_string("function"), e.optional_uint("index")});
    }
  }
  return t;
}

Callsite read_callsite(const Reader& r) {
  r.allow_only({"id", "kind", "loc", "args", "returns_used", "callee_name_hint",
                "enclosing_function", "static_class", "table_order", "entry_index"});
  Callsite cs;
  cs.id = r.string("id");
  const std::string kind = r.string("kind");
  if (kind == "virtual_dispatch") {
    cs.kind = CallsiteKind::kVirtualDispatch;
  } else if (kind == "function_pointer") {
    cs.kind = CallsiteKind::kFunctionPointer;
  } else {
    r.fail("unknown callsite kind '" + kind + "'");
  }
  cs.source_loc = read_loc(r, "loc");
  auto args = read_params(r, "args");
  if (args.is_variadic) r.fail("callsite arguments cannot be variadic");
  cs.args = std::move(args.params);
  cs.returns_used = r.boolean("returns_used", false);
  cs.callee_name_hint = r.optional_string("callee_name_hint");
  cs.enclosing_function = r.optional_string("enclosing_function");
  cs.static_class = r.optional_string("static_class");
  cs.table_order = r.optional_uint("table_order");
  cs.entry_index = r.optional_uint("entry_index");
  return cs;
}

template <typename Record, typename Fn>
std::vector<Record> read_collection(const Reader& top, const char* key, Fn read_one) {
  std::vector<Record> out;
  if (!top.has(key)) return out;
  const json& items = top.array(key);
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back(read_one(Reader(items[i], top.child(key, i))));
  return out;
}

ordered_json type_list(const std::vector<TypeExpr>& types, bool variadic) {
  ordered_json out = ordered_json::array();
  for (const auto& t : types) out.push_back(t.str());
  if (variadic) out.push_back(std::string(kVariadicMarker));
  return out;
}

ordered_json loc_json(const SourceLoc& loc) {
  ordered_json out;
  out["file"] = loc.file;
  out["line"] = loc.line;
  out["column"] = loc.column;
  return out;
}

std::string_view entry_kind_name(EntryKind k) {
  switch (k) {
    case EntryKind::kFunction: return "function";
    case EntryKind::kThunk: return "thunk";
    case EntryKind::kOffset: return "offset";
    case EntryKind::kPure: return "pure";
  }
  return "function";
}

}  // namespace

ProgramFacts parse_facts(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw FactsSchemaError("$", "top level must be an object");
  if (!doc.contains("format_version")) throw VersionMismatchError("missing format_version");
  const json& version = doc.at("format_version");
  if (!version.is_number_unsigned() || version.get<std::uint64_t>() != kFactsFormatVersion) {
    throw VersionMismatchError("unsupported format_version " + version.dump() + ", expected " +
                               std::to_string(kFactsFormatVersion));
  }
  Reader top(doc, "$");
  top.allow_only({"format_version", "classes", "functions", "vtables", "callsites"});
  return ProgramFacts(read_collection<ClassRecord>(top, "classes", read_class),
                      read_collection<FunctionRecord>(top, "functions", read_function),
                      read_collection<VTableRecord>(top, "vtables", read_vtable),
                      read_collection<Callsite>(top, "callsites", read_callsite),
                      kFactsFormatVersion);
}

std::string write_facts(const ProgramFacts& facts) {
  ordered_json doc;
  doc["format_version"] = facts.format_version();

  ordered_json classes = ordered_json::array();
  for (const auto& c : facts.classes()) {
    ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    ordered_json bases = ordered_json::array();
    for (const auto& b : c.bases) {
      ordered_json bj;
      bj["id"] = b.class_id;
      bj["virtual"] = b.is_virtual_base;
      bases.push_back(std::move(bj));
    }
    j["bases"] = std::move(bases);
    j["is_virtual_class"] = c.is_virtual_class;
    classes.push_back(std::move(j));
  }
  doc["classes"] = std::move(classes);

  ordered_json functions = ordered_json::array();
  for (const auto& f : facts.functions()) {
    ordered_json j;
    j["id"] = f.id;
    j["name"] = f.name;
    if (f.owning_class) j["owning_class"] = *f.owning_class;
    j["params"] = type_list(f.params, f.is_variadic);
    j["return"] = f.return_type.str();
    j["virtual"] = f.is_virtual;
    j["pure_virtual"] = f.is_pure_virtual;
    j["loc"] = loc_json(f.source_loc);
    if (!f.direct_callers.empty()) j["direct_callers"] = f.direct_callers;
    functions.push_back(std::move(j));
  }
  doc["functions"] = std::move(functions);

  ordered_json vtables = ordered_json::array();
  for (const auto& t : facts.vtables()) {
    ordered_json j;
    j["id"] = t.id;
    j["owning_class"] = t.owning_class;
    j["order"] = t.order;
    j["base_path"] = t.base_path;
    ordered_json entries = ordered_json::array();
    for (const auto& e : t.entries) {
      ordered_json ej;
      ej["kind"] = entry_kind_name(e.kind);
      if (e.function_id) ej["function"] = *e.function_id;
      if (e.entry_index) ej["index"] = *e.entry_index;
      entries.push_back(std::move(ej));
    }
    j["entries"] = std::move(entries);
    vtables.push_back(std::move(j));
  }
  doc["vtables"] = std::move(vtables);

  ordered_json callsites = ordered_json::array();
  for (const auto& cs : facts.callsites()) {
    ordered_json j;
    j["id"] = cs.id;
    j["kind"] = cs.is_virtual() ? "virtual_dispatch" : "function_pointer";
    j["loc"] = loc_json(cs.source_loc);
    j["args"] = type_list(cs.args, false);
    j["returns_used"] = cs.returns_used;
    if (cs.callee_name_hint) j["callee_name_hint"] = *cs.callee_name_hint;
    if (cs.enclosing_function) j["enclosing_function"] = *cs.enclosing_function;
    if (cs.static_class) j["static_class"] = *cs.static_class;
    if (cs.table_order) j["table_order"] = *cs.table_order;
    if (cs.entry_index) j["entry_index"] = *cs.entry_index;
    callsites.push_back(std::move(j));
  }
  doc["callsites"] = std::move(callsites);

  return doc.dump(2) + "\n";
}

GadgetAnnotations parse_gadgets(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw FactsSchemaError("$", "gadget file must be an object");
  GadgetAnnotations::Map flags;
  for (const auto& [id, value] : doc.items()) {
    Reader r(value, "$." + id);
    r.allow_only({"fwd", "ret"});
    flags[id] = {r.boolean("fwd", false), r.boolean("ret", false)};
  }
  return GadgetAnnotations(std::move(flags));
}

std::string write_gadgets(const GadgetAnnotations& gadgets) {
  ordered_json doc = ordered_json::object();
  for (const auto& [id, flags] : gadgets.entries()) {
    ordered_json j;
    j["fwd"] = flags.has_forward_gadget;
    j["ret"] = flags.has_return_gadget;
    doc[id] = std::move(j);
  }
  return doc.dump(2) + "\n";
}

}  // namespace cfisurface
