#include "doctest.h"

#include <cmath>
#include <sstream>

#include "aniheat/grid.hpp"
#include "test_util.hpp"

using namespace aniheat;

TEST_CASE("grid validates its parameters") {
    CHECK_THROWS_AS(Grid(1, 7, 1.0), Error);
    CHECK_THROWS_AS(Grid(1, 4, 1.0), Error);
    CHECK_THROWS_AS(Grid(1, 16, -1.0), Error);
    CHECK_THROWS_AS(Grid(0, 16, 1.0), Error);
    CHECK_NOTHROW(Grid(2, 8, 2.0));
}

TEST_CASE("coordinates and frequencies") {
    const Grid g(1, 8, 4.0);
    CHECK(g.spacing() == doctest::Approx(0.5));
    CHECK(g.coordinate(0) == doctest::Approx(-2.0));
    CHECK(g.coordinate(4) == doctest::Approx(0.0));
    CHECK(g.frequency(0) == 0.0);
    CHECK(g.frequency(1) == doctest::Approx(2.0 * M_PI / 4.0));
    CHECK(g.frequency(7) == doctest::Approx(-2.0 * M_PI / 4.0));
    CHECK(g.frequency(4) == doctest::Approx(-4.0 * 2.0 * M_PI / 4.0));
}

TEST_CASE("row-major unravel") {
    const Grid g(2, 8, 1.0);
    int idx[2];
    g.unravel(8 * 3 + 5, idx);
    CHECK(idx[0] == 3);
    CHECK(idx[1] == 5);
}

TEST_CASE("field construction validates values") {
    const Grid g(1, 8, 1.0);
    std::vector<double> bad(8, 0.0);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(GridField(g, bad), Error);
    CHECK_THROWS_AS(GridField(g, std::vector<double>(7, 0.0)), Error);
}

TEST_CASE("binary field format round trip is bit exact") {
    testutil::Rng rng(3);
    const Grid g(2, 16, 3.5);
    GridField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal();
    const std::string bytes = encode_field(f);
    CHECK(bytes.size() == 32 + 8 * f.size());
    const GridField back = decode_field(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
    CHECK(back.grid() == g);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
}

TEST_CASE("binary field format rejects corruption") {
    const Grid g(1, 8, 1.0);
    const GridField f(g);
    std::string bytes = encode_field(f);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_field(std::span<const unsigned char>(
                        reinterpret_cast<const unsigned char*>(bad_magic.data()), bad_magic.size())),
                    IoError);
    std::string truncated = bytes.substr(0, bytes.size() - 4);
    CHECK_THROWS_AS(decode_field(std::span<const unsigned char>(
                        reinterpret_cast<const unsigned char*>(truncated.data()), truncated.size())),
                    IoError);
}

TEST_CASE("csv export lists coordinates then the value") {
    const Grid g(1, 8, 2.0);
    GridField f(g);
    f[0] = 1.25;
    std::ostringstream out;
    write_field_csv(f, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "x_1,value");
    std::getline(in, line);
    CHECK(line == "-1,1.25");
}
