#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "synthctl/csv.hpp"
#include "synthctl/date.hpp"

using namespace synthctl;

TEST_CASE("ISO dates parse and format round-trip") {
    auto d = Date::parse_iso("2023-04-02");
    CHECK(d.to_iso() == "2023-04-02");
    CHECK(d.weekday() == Weekday::sunday);
    CHECK((d + 7).to_iso() == "2023-04-09");
    CHECK(Date::parse_iso("2024-02-29").to_iso() == "2024-02-29");  // leap day
}

TEST_CASE("invalid calendar dates are rejected") {
    CHECK_FALSE(Date::try_parse_iso("2023-13-40").has_value());
    CHECK_FALSE(Date::try_parse_iso("2023-02-30").has_value());
    CHECK_FALSE(Date::try_parse_iso("2023-4-2").has_value());
    CHECK_FALSE(Date::try_parse_iso("20230402").has_value());
    CHECK_THROWS_AS(Date::parse_iso("not-a-date"), DataError);
}

TEST_CASE("week_start snaps to the anchor weekday") {
    auto wednesday = Date::parse_iso("2023-04-05");
    CHECK(week_start(wednesday, Weekday::sunday).to_iso() == "2023-04-02");
    CHECK(week_start(wednesday, Weekday::monday).to_iso() == "2023-04-03");
    CHECK(week_start(wednesday, Weekday::wednesday).to_iso() == "2023-04-05");
    // Anchor after the date's weekday wraps to the previous week.
    CHECK(week_start(wednesday, Weekday::thursday).to_iso() == "2023-03-30");
}

TEST_CASE("weekday names parse") {
    CHECK(parse_weekday("sun") == Weekday::sunday);
    CHECK(parse_weekday("Monday") == Weekday::monday);
    CHECK_THROWS_AS(parse_weekday("someday"), UsageError);
}

TEST_CASE("CSV reader handles quoting and line tracking") {
    std::istringstream in(
        "a,b,c\r\n"
        "1,\"two, with comma\",3\n"
        "4,\"quote \"\" inside\",\"multi\nline\"\n");
    auto records = read_csv(in);
    REQUIRE(records.size() == 3);
    CHECK(records[0].fields == std::vector<std::string>{"a", "b", "c"});
    CHECK(records[1].fields[1] == "two, with comma");
    CHECK(records[2].fields[1] == "quote \" inside");
    CHECK(records[2].fields[2] == "multi\nline");
    CHECK(records[1].line == 2);
}

TEST_CASE("CSV reader rejects malformed input") {
    std::istringstream unterminated("a,\"open\n");
    CHECK_THROWS_AS(read_csv(unterminated), ParseError);
}

TEST_CASE("CSV escaping round-trips through the reader") {
    std::ostringstream out;
    write_csv_row(out, {"plain", "has,comma", "has\"quote", "has\nnewline"});
    std::istringstream in(out.str());
    auto records = read_csv(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].fields ==
          std::vector<std::string>{"plain", "has,comma", "has\"quote", "has\nnewline"});
}

TEST_CASE("double formatting is exact and parseable") {
    for (double v : {0.1, 1.0 / 3.0, 1e-9, 123456.789, -2.5e300, 0.0}) {
        auto text = format_double(v);
        auto parsed = try_parse_double(text);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == v);
    }
    CHECK_FALSE(try_parse_double("12x").has_value());
    CHECK_FALSE(try_parse_double("").has_value());
}
