use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBinWidth {
    Day,
    #[default]
    Week,
    Month,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBin {
    pub start: NaiveDate,
    /// Every key seen anywhere in the series, zero where absent from this bin.
    pub counts: BTreeMap<String, usize>,
}

/// First day of the bin holding `date`; weeks are ISO weeks starting on Monday.
pub fn bin_start(date: NaiveDate, width: TimeBinWidth) -> NaiveDate {
    match width {
        TimeBinWidth::Day => date,
        TimeBinWidth::Week => date - Duration::days(date.weekday().num_days_from_monday() as i64),
        TimeBinWidth::Month => date.with_day(1).expect("day 1 exists"),
    }
}

fn next_bin(start: NaiveDate, width: TimeBinWidth) -> NaiveDate {
    match width {
        TimeBinWidth::Day => start + Duration::days(1),
        TimeBinWidth::Week => start + Duration::days(7),
        TimeBinWidth::Month => {
            let (y, m) = if start.month() == 12 { (start.year() + 1, 1) } else { (start.year(), start.month() + 1) };
            NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start")
        }
    }
}

/// Counts of `(date, key)` records per calendar bin, with empty bins filled in between
/// the first and last observed bin.
pub fn temporal_series<'a>(records: impl IntoIterator<Item = (NaiveDate, &'a str)>, width: TimeBinWidth) -> Vec<TimeBin> {
    let mut counts: BTreeMap<NaiveDate, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut keys = BTreeSet::new();
    for (date, key) in records {
        keys.insert(key);
        *counts.entry(bin_start(date, width)).or_default().entry(key).or_insert(0) += 1;
    }
    let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut at = first;
    while at <= last {
        let here = counts.get(&at);
        out.push(TimeBin {
            start: at,
            counts: keys
                .iter()
                .map(|k| (k.to_string(), here.and_then(|h| h.get(k)).copied().unwrap_or(0)))
                .collect(),
        });
        at = next_bin(at, width);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn iso_weeks() {
        // 2024-10-07 is a Monday, so the 7th and 9th share a week.
        let s = temporal_series([(d(2024, 10, 7), "x"), (d(2024, 10, 9), "x")], TimeBinWidth::Week);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].counts["x"], 2);
        assert_eq!(d(2024, 10, 7).iso_week().week(), d(2024, 10, 9).iso_week().week());
        // In 2023 the 7th is a Saturday and the 9th the following Monday.
        let s = temporal_series([(d(2023, 10, 7), "x"), (d(2023, 10, 9), "x")], TimeBinWidth::Week);
        assert_eq!(s.iter().map(|b| b.start).collect::<Vec<_>>(), vec![d(2023, 10, 2), d(2023, 10, 9)]);
    }

    #[test]
    fn month_gaps_are_filled() {
        let s = temporal_series([(d(2023, 10, 20), "a"), (d(2023, 12, 3), "b")], TimeBinWidth::Month);
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].start, d(2023, 11, 1));
        assert_eq!(s[1].counts, BTreeMap::from([("a".into(), 0), ("b".into(), 0)]));
        assert_eq!(s[2].counts["b"], 1);
        let s = temporal_series([(d(2023, 12, 31), "a"), (d(2024, 1, 1), "a")], TimeBinWidth::Month);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn days_and_empty() {
        assert!(temporal_series(std::iter::empty(), TimeBinWidth::Day).is_empty());
        let s = temporal_series([(d(2023, 10, 1), "a"), (d(2023, 10, 4), "a")], TimeBinWidth::Day);
        assert_eq!(s.len(), 4);
    }
}
