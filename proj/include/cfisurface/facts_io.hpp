#pragma once

#include <string>
#include <string_view>

#include "cfisurface/facts.hpp"

namespace cfisurface {

/// Decodes a `.cfifacts.json` document. The result is structurally sound but
/// not validated; run validate_facts before analysis.
/// Throws FactsSyntaxError, FactsSchemaError, VersionMismatchError.
ProgramFacts parse_facts(std::string_view text);

/// Canonical serialization: fixed key order, collections ascending by id,
/// two-space indentation, trailing newline.
std::string write_facts(const ProgramFacts& facts);

/// Gadget inventory: `{"<function id>": {"fwd": bool, "ret": bool}, ...}`.
GadgetAnnotations parse_gadgets(std::string_view text);
std::string write_gadgets(const GadgetAnnotations& gadgets);

}  // namespace cfisurface
