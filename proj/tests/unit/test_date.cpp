#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "etfrank/date.hpp"
#include "support.hpp"

using etfrank::BusinessCalendar;
using etfrank::Date;
using testsupport::D;

TEST_CASE("date parsing is strict ISO-8601") {
    CHECK(Date::parse("2020-02-29") == Date(2020, 2, 29));
    CHECK(Date::parse("1970-01-01").serial() == 0);
    CHECK(Date(2012, 3, 30).str() == "2012-03-30");
    for (const char* bad : {"2021-02-29", "2020-1-01", "20200101", "2020-01-01x", "", "2020/01/01", "2020-13-01"}) {
        CHECK_THROWS_AS(Date::parse(bad), std::invalid_argument);
    }
}

TEST_CASE("calendar quarter end") {
    CHECK(etfrank::calendar_quarter_end(D("2020-02-29")) == D("2020-03-31"));
    CHECK(etfrank::calendar_quarter_end(D("2020-04-01")) == D("2020-06-30"));
    CHECK(etfrank::calendar_quarter_end(D("2020-12-31")) == D("2020-12-31"));
}

TEST_CASE("US market holidays follow exchange observance rules") {
    const auto h2022 = etfrank::us_market_holidays(2022);
    const std::vector<Date> expected = {D("2022-01-17"), D("2022-02-21"), D("2022-04-15"),
                                        D("2022-05-30"), D("2022-06-20"), D("2022-07-04"),
                                        D("2022-09-05"), D("2022-11-24"), D("2022-12-26")};
    // New Year's Day 2022 fell on a Saturday and is not observed on the Friday before.
    CHECK(std::vector<Date>(h2022.begin(), h2022.end()) == expected);

    const BusinessCalendar bd;
    CHECK(bd.is_business_day(D("2021-12-31")));
    CHECK_FALSE(bd.is_business_day(D("2020-04-10")));  // Good Friday
    CHECK_FALSE(bd.is_business_day(D("2019-04-19")));
    CHECK_FALSE(bd.is_business_day(D("2020-07-03")));  // Independence Day observed
    CHECK(bd.is_business_day(D("2021-06-18")));  // Juneteenth observed only from 2022
    CHECK_FALSE(bd.is_business_day(D("2023-06-19")));
    CHECK_FALSE(bd.is_business_day(D("2020-01-04")));  // Saturday
}

TEST_CASE("last business day of month and quarter-end rebalance dates") {
    const BusinessCalendar bd;
    CHECK(bd.last_business_day_of_month(2012, 3) == D("2012-03-30"));
    CHECK(bd.last_business_day_of_month(2022, 4) == D("2022-04-29"));
    CHECK(bd.last_business_day_of_month(2016, 12) == D("2016-12-30"));
    CHECK(bd.last_business_day_of_month(2020, 6) == D("2020-06-30"));

    const auto dates = bd.quarter_end_rebalance_dates(D("2020-01-01"), D("2020-12-31"));
    CHECK(dates == std::vector<Date>{D("2020-03-31"), D("2020-06-30"), D("2020-09-30"), D("2020-12-31")});
    CHECK(bd.quarter_end_rebalance_dates(D("2020-04-01"), D("2020-06-29")).empty());
}

TEST_CASE("business day ranges are half-open on the left") {
    const BusinessCalendar bd;
    const auto days = bd.business_days(D("2020-07-01"), D("2020-07-08"));
    CHECK(days == std::vector<Date>{D("2020-07-02"), D("2020-07-06"), D("2020-07-07"), D("2020-07-08")});
    CHECK(bd.count_business_days(D("2020-07-01"), D("2020-07-08")) == 4);
    CHECK(bd.business_day_at_or_before(D("2020-07-05")) == D("2020-07-02"));
}

TEST_CASE("custom holiday calendars") {
    const BusinessCalendar bd(std::vector<Date>{D("2020-03-31")});
    CHECK(bd.last_business_day_of_month(2020, 3) == D("2020-03-30"));
    CHECK(bd.is_business_day(D("2020-12-25")));

    testsupport::TempDir tmp;
    testsupport::write_file(tmp / "h.csv", "date\n2020-03-31\n2020-06-30\n");
    const auto from_file = BusinessCalendar::from_holiday_file((tmp / "h.csv").string());
    CHECK(from_file.holidays().size() == 2);
    CHECK(from_file.last_business_day_of_month(2020, 6) == D("2020-06-29"));
}
