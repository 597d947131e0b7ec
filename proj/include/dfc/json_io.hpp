// JSON (de)serialization of fields and reports, with a deterministic writer:
// keys sorted, numbers at 17 significant digits.
#pragma once

#include <json.hpp>
#include <string>

#include "dfc/field.hpp"
#include "dfc/identities.hpp"
#include "dfc/solver.hpp"
#include "dfc/symbol.hpp"

namespace dfc {

using Json = nlohmann::json;

Json domain_to_json(const FlatDomain& dom);
FlatDomain domain_from_json(const Json& j);

// {"d":..,"k":..,"m":..,"coeffs":[{"form":[..],"vector":[..],"re":"p/q","im":"p/q"}]}
Json value_to_json(const DoubleForm<CRational>& v);
DoubleForm<CRational> value_from_json(const Json& j);

// {"domain":{..},"k":..,"m":..,"coeffs":[{"form":[..],"vector":[..],
//   "poly":[{"exps":[..],"coef":"p/q"}]}]}
Json field_to_json(const PolyField& f);
PolyField field_from_json(const Json& j);

Json identity_report_to_json(const IdentityReport& rep);
Json ellipticity_report_to_json(const EllipticityReport& rep);
Json solve_result_to_json(const SolveResult& res);
Json decomposition_to_json(const DecompositionResult& dec);

// Deterministic serialization: byte-identical output for identical content.
std::string dump_deterministic(const Json& j, int indent = 2);
void write_report(const Json& j, const std::string& path);

// "h,err,order" convergence tables
std::string convergence_csv(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace dfc
