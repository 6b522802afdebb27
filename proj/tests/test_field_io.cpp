#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "alphadyn/error.hpp"
#include "alphadyn/field_io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alphadyn;

TEST_SUITE("field_io") {
  TEST_CASE("bit-exact round trip") {
    testing::Rng r(11);
    SpectralField f = testing::random_field(3, r);
    f.set_period_scale(1.0 / 0.9);
    std::stringstream ss;
    write_field(ss, f);
    const SpectralField g = read_field(ss);
    CHECK(g.N() == f.N());
    CHECK(g.kind() == f.kind());
    CHECK(g.period_scale() == f.period_scale());
    CHECK(std::memcmp(g.data(), f.data(), sizeof(cplx) * f.size()) == 0);
  }

  TEST_CASE("file round trip keeps the real-valued tag") {
    const SpectralField U = make_abc({1, 2, 3}, 2);
    const auto p = std::filesystem::temp_directory_path() / "alphadyn_io_test.field";
    save_field(p, U);
    const SpectralField V = load_field(p);
    std::filesystem::remove(p);
    CHECK(V.kind() == FieldKind::real_valued);
    CHECK(testing::max_abs_diff(U, V) == 0.0);
  }

  TEST_CASE("corrupt input is rejected") {
    std::stringstream bad("not a field\n{}\n");
    CHECK_THROWS_AS(read_field(bad), Error);
    std::stringstream ss;
    write_field(ss, make_abc({1, 1, 1}, 1));
    std::string s = ss.str();
    s.resize(s.size() - 8);
    std::stringstream cut(s);
    CHECK_THROWS_AS(read_field(cut), Error);
    CHECK_THROWS_AS(load_field("/nonexistent/dir/x.field"), Error);
  }
}
