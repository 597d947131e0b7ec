#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfc/identities.hpp"

using namespace dfc;

TEST_CASE("identity lattice passes exactly at d = 2, 3") {
  auto rep = verify_identities(7, 2, 3, 2, 3);
  for (const auto& e : rep.entries) {
    INFO(e.name << " d=" << e.d);
    CHECK(e.failed == 0);
  }
  CHECK(rep.all_pass());
  CHECK(rep.total_checked() > 1000);
}

TEST_CASE("report structure carries per-identity counts") {
  auto rep = verify_identities(3, 2, 2, 2, 1);
  CHECK(!rep.entries.empty());
  bool found_exact = false;
  for (const auto& e : rep.entries) {
    CHECK(e.checked > 0);
    if (e.name == "exact_relations") found_exact = true;
  }
  CHECK(found_exact);
}

TEST_CASE("identical seeds reproduce identical reports") {
  auto a = verify_identities(11, 2, 2, 2, 2);
  auto b = verify_identities(11, 2, 2, 2, 2);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].name == b.entries[i].name);
    CHECK(a.entries[i].checked == b.entries[i].checked);
    CHECK(a.entries[i].failed == b.entries[i].failed);
  }
}
