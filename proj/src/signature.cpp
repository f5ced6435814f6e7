#include "cfisurface/signature.hpp"

#include <functional>

namespace cfisurface {
namespace {

bool same_or_both_pointers(const TypeExpr& a, const TypeExpr& b) {
  return a == b || (a.is_pointer() && b.is_pointer());
}

template <typename TypeMatch>
bool params_match(const SignatureKey& cs, const SignatureKey& fn, TypeMatch match) {
  if (fn.is_variadic || cs.arity() != fn.arity()) return false;
  for (std::size_t i = 0; i < cs.arity(); ++i) {
    if (!match(cs.param_types[i], fn.param_types[i])) return false;
  }
  return true;
}

bool names_match(const SignatureKey& cs, const SignatureKey& fn) {
  return cs.name && fn.name && *cs.name == *fn.name;
}

}  // namespace

SignatureKey callsite_signature(const Callsite& cs) {
  return {cs.args, !cs.returns_used, cs.callee_name_hint, false};
}

SignatureKey function_signature(const FunctionRecord& f) {
  return {f.params, f.return_type.is_void(), f.name, f.is_variadic};
}

bool match_safe(const SignatureKey& callsite, const SignatureKey& function) {
  return params_match(callsite, function, same_or_both_pointers);
}

bool match_src(const SignatureKey& callsite, const SignatureKey& function) {
  return params_match(callsite, function, std::equal_to<TypeExpr>{});
}

bool match_strict(const SignatureKey& callsite, const SignatureKey& function) {
  return names_match(callsite, function) && match_src(callsite, function);
}

bool match_strict_pointer_interchange(const SignatureKey& callsite, const SignatureKey& function) {
  return names_match(callsite, function) && match_safe(callsite, function);
}

std::string exact_param_key(const std::vector<TypeExpr>& params) {
  std::string key;
  for (const auto& p : params) {
    key += p.str();
    key += ',';
  }
  return key;
}

std::string pointer_erased_param_key(const std::vector<TypeExpr>& params) {
  std::string key;
  for (const auto& p : params) {
    key += p.is_pointer() ? "ptr(*)" : p.str();
    key += ',';
  }
  return key;
}

}  // namespace cfisurface
