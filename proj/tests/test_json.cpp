#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/json_io.hpp"

using namespace dfc;

TEST_CASE("field round trip preserves exact coefficients") {
  Prng rng(5);
  auto dom = FlatDomain::unit_box(3);
  auto f = random_poly_field(rng, dom, 1, 2, 3);
  auto j = field_to_json(f);
  auto f2 = field_from_json(j);
  CHECK(f2.value == f.value);
  CHECK(f2.domain.d == 3);

  // rational scalars serialize as p/q strings
  PolyForm v(2, 0, 0);
  v.set({{}, {}}, Poly(2, Rational(1, 3)));
  auto jf = field_to_json(PolyField{FlatDomain::unit_box(2), v});
  CHECK(jf["coeffs"][0]["poly"][0]["coef"] == "1/3");
}

TEST_CASE("pointwise value round trip with complex rational scalars") {
  DoubleForm<CRational> v(2, 1, 1);
  v.set({{1}, {2}}, CRational(Rational(3, 2), Rational(-1, 7)));
  auto j = value_to_json(v);
  CHECK(j["coeffs"][0]["re"] == "3/2");
  CHECK(j["coeffs"][0]["im"] == "-1/7");
  auto v2 = value_from_json(j);
  CHECK(v2 == v);
}

TEST_CASE("deterministic writer: sorted keys, 17 significant digits, stable") {
  Json j;
  j["zeta"] = 1.0 / 3.0;
  j["alpha"] = Json::array({1, 2});
  j["mid"] = Json{{"b", true}, {"a", "x"}};
  auto s1 = dump_deterministic(j);
  auto s2 = dump_deterministic(j);
  CHECK(s1 == s2);
  CHECK(s1.find("\"alpha\"") < s1.find("\"mid\""));
  CHECK(s1.find("\"mid\"") < s1.find("\"zeta\""));
  CHECK(s1.find("0.33333333333333331") != std::string::npos);
  CHECK(s1.find("\"a\"") < s1.find("\"b\""));
}

TEST_CASE("convergence csv schema") {
  auto csv = convergence_csv({0.1, 0.05}, {1e-2, 2.6e-3});
  CHECK(csv.rfind("h,err,order\n", 0) == 0);
  CHECK(csv.find("0.05") != std::string::npos);
  // order ~ log2(1e-2/2.6e-3) ~ 1.94
  CHECK(csv.find("1.94") != std::string::npos);
}

TEST_CASE("report serializers carry the schema tag") {
  IdentityReport rep;
  rep.entries.push_back({"x", 2, 5, 0});
  auto j = identity_report_to_json(rep);
  CHECK(j["schema"] == "1");
  CHECK(j["pass"] == true);

  EllipticityReport er;
  er.d = 2;
  er.set = BoundarySet::TT;
  auto je = ellipticity_report_to_json(er);
  CHECK(je["schema"] == "1");
  CHECK(je["case"]["set"] == "TT");
}
