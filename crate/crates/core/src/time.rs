//! UTC timestamp helpers. All times are integer seconds since the Unix epoch.

use chrono::{DateTime, NaiveDate, TimeZone, Utc};

pub const SECONDS_PER_HOUR: i64 = 3_600;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Parses an ISO-8601 / RFC-3339 timestamp (any offset) or a Twitter
/// `created_at` string such as `Fri Dec 14 15:02:00 +0000 2012`.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%z") {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y") {
        return Some(dt.timestamp());
    }
    // Naive timestamps are taken to be UTC already.
    if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(naive.and_utc().timestamp());
    }
    None
}

pub fn format_timestamp(ts: i64) -> String {
    match Utc.timestamp_opt(ts, 0).single() {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

/// Start of the UTC hour containing `ts`.
pub fn floor_hour(ts: i64) -> i64 {
    ts.div_euclid(SECONDS_PER_HOUR) * SECONDS_PER_HOUR
}

/// Start of the UTC day containing `ts`.
pub fn floor_day(ts: i64) -> i64 {
    ts.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY
}

/// Parses `YYYY-MM-DD` into the epoch second of that day's UTC midnight.
pub fn parse_date(s: &str) -> Option<i64> {
    let date = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()?;
    Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp())
}

pub fn format_date(ts: i64) -> String {
    match Utc.timestamp_opt(ts, 0).single() {
        Some(dt) => dt.format("%Y-%m-%d").to_string(),
        None => ts.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_formats() {
        assert_eq!(parse_timestamp("2012-12-14T15:02:00Z"), Some(1_355_497_320));
        assert_eq!(parse_timestamp("2012-12-14T10:02:00-05:00"), Some(1_355_497_320));
        assert_eq!(parse_timestamp("Fri Dec 14 15:02:00 +0000 2012"), Some(1_355_497_320));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn floors_are_utc_aligned() {
        let ts = 1_355_497_320;
        assert_eq!(format_timestamp(floor_hour(ts)), "2012-12-14T15:00:00Z");
        assert_eq!(format_timestamp(floor_day(ts)), "2012-12-14T00:00:00Z");
        assert_eq!(floor_day(-1), -SECONDS_PER_DAY);
        assert_eq!(parse_date("2012-12-14"), Some(floor_day(ts)));
        assert_eq!(format_date(ts), "2012-12-14");
    }
}
