#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace etfrank {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
    Date(int y, unsigned m, unsigned d);

    /// Strict ISO-8601 `YYYY-MM-DD`; throws std::invalid_argument otherwise.
    static Date parse(std::string_view text);

    std::chrono::sys_days sys() const { return std::chrono::sys_days{std::chrono::days{days_}}; }
    std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{sys()}; }
    int year() const { return static_cast<int>(ymd().year()); }
    unsigned month() const { return static_cast<unsigned>(ymd().month()); }
    unsigned day() const { return static_cast<unsigned>(ymd().day()); }
    std::int32_t serial() const { return days_; }

    Date plus_days(int n) const { return Date::from_serial(days_ + n); }
    static Date from_serial(std::int32_t s) {
        Date d;
        d.days_ = s;
        return d;
    }

    std::string str() const;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::int32_t days_ = 0;
};

/// Last calendar day of the quarter containing `d`.
Date calendar_quarter_end(Date d);

/// NYSE-style holiday schedule for one year (observance rules applied).
std::vector<Date> us_market_holidays(int year);

/// Weekends plus a holiday set.
class BusinessCalendar {
public:
    /// Default: US market holidays generated for 1990..2100.
    BusinessCalendar();
    explicit BusinessCalendar(std::vector<Date> holidays);

    static BusinessCalendar from_holiday_file(const std::string& path);

    bool is_business_day(Date d) const;
    Date last_business_day_of_month(int year, unsigned month) const;
    /// Latest business day <= d.
    Date business_day_at_or_before(Date d) const;
    /// All business days in (from, to].
    std::vector<Date> business_days(Date from_exclusive, Date to_inclusive) const;
    /// Number of business days in (from, to].
    int count_business_days(Date from_exclusive, Date to_inclusive) const;

    /// Last business day of each March/June/September/December with
    /// first <= date <= last.
    std::vector<Date> quarter_end_rebalance_dates(Date first, Date last) const;

    const std::set<Date>& holidays() const { return holidays_; }

private:
    std::set<Date> holidays_;
};

}  // namespace etfrank
