#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

using namespace etfrank;

TEST_CASE("csv parsing keeps line numbers and trims fields") {
    const auto t = parse_csv("a,b\n1, 2\n\n3,4\n", "mem");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows[0].fields[1] == "2");
    CHECK(t.rows[1].line == 4);
    CHECK(t.column("b") == std::size_t{1});
    CHECK_FALSE(t.column("c").has_value());
    CHECK_THROWS_AS(t.require_column("c"), SchemaError);
}

TEST_CASE("csv field-count mismatch reports the line") {
    try {
        parse_csv("a,b\n1,2\n3\n", "mem.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("mem.csv:3") != std::string::npos);
    }
}

TEST_CASE("number parsing") {
    CHECK_FALSE(parse_optional_number("").has_value());
    CHECK(parse_number("1e3") == 1000.0);
    CHECK(parse_number("+2.5") == 2.5);
    CHECK(parse_number("-0.25") == -0.25);
    CHECK_THROWS_AS(parse_number("abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("1,000"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("nan"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("inf"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
}

TEST_CASE("number formatting round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5, std::nextafter(1.0, 2.0)}) {
        CHECK(parse_number(format_number(v)) == v);
    }
    CHECK(format_number(0.5) == "0.5");
}
