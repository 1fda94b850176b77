//! CSV encodings of sweep datasets and their aggregates.

use std::io::{Read, Write};

use super::{BoxRow, BoxStats, ManifestEntry, MetricRow, QuantileRow, ScenarioKey, SweepDataset};
use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "mutation_prob,cross_immunity,cross_protection,isolate_symptomatic,social_distancing,\
replication,step,share_infected,mortality,cumulative_infected_share,mean_r0,mean_adapted_ratio,\
max_antigenic_distance,mean_phylo_distance,mean_infectiousness,mean_latent_end,mean_incubation_end,mean_duration,\
mean_symptomatic_chance,mean_fatality,active_variant_count,extinct";

pub const QUANTILE_HEADER: &str =
    "mutation_prob,cross_immunity,cross_protection,isolate_symptomatic,social_distancing,step,quantile,value";

pub const BOX_HEADER: &str = "mutation_prob,cross_immunity,cross_protection,isolate_symptomatic,social_distancing,\
median,q1,q3,whisker_low,whisker_high,notch_low,notch_high,outliers";

pub const MANIFEST_HEADER: &str =
    "scenario,mutation_prob,cross_immunity,cross_protection,isolate_symptomatic,social_distancing,replication,seed";

pub fn write_dataset_header<W: Write + ?Sized>(w: &mut W) -> Result<()> {
    writeln!(w, "{DATASET_HEADER}")?;
    Ok(())
}

pub fn write_rows<W: Write + ?Sized>(w: &mut W, rows: &[MetricRow]) -> Result<()> {
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario.csv_fields(),
            r.replication,
            r.step,
            r.share_infected,
            r.mortality,
            r.cumulative_infected_share,
            r.mean_r0,
            r.mean_adapted_ratio,
            r.max_antigenic_distance,
            r.mean_phylo_distance,
            r.mean_infectiousness,
            r.mean_latent_end,
            r.mean_incubation_end,
            r.mean_duration,
            r.mean_symptomatic_chance,
            r.mean_fatality,
            r.active_variant_count,
            r.extinct
        )?;
    }
    Ok(())
}

pub fn write_dataset<W: Write + ?Sized>(w: &mut W, ds: &SweepDataset) -> Result<()> {
    write_dataset_header(w)?;
    write_rows(w, &ds.rows)
}

pub fn write_quantiles<W: Write + ?Sized>(w: &mut W, rows: &[QuantileRow]) -> Result<()> {
    writeln!(w, "{QUANTILE_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.scenario.csv_fields(), r.step, r.quantile, r.value)?;
    }
    Ok(())
}

pub fn write_boxes<W: Write + ?Sized>(w: &mut W, rows: &[BoxRow]) -> Result<()> {
    writeln!(w, "{BOX_HEADER}")?;
    for r in rows {
        let s = &r.stats;
        let outliers: Vec<String> = s.outliers.iter().map(f64::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario.csv_fields(),
            s.median,
            s.q1,
            s.q3,
            s.whisker_low,
            s.whisker_high,
            s.notch_low,
            s.notch_high,
            outliers.join(";")
        )?;
    }
    Ok(())
}

pub fn write_manifest<W: Write + ?Sized>(w: &mut W, entries: &[ManifestEntry]) -> Result<()> {
    writeln!(w, "{MANIFEST_HEADER}")?;
    for e in entries {
        writeln!(w, "{},{},{},{}", e.scenario_index, e.scenario.csv_fields(), e.replication, e.seed)?;
    }
    Ok(())
}

/// Reads records after checking the header matches `expected` exactly.
fn records<R: Read>(r: R, expected: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != expected {
        return Err(Error::Schema(format!("unexpected header `{header}`")));
    }
    Ok(reader.records().collect::<std::result::Result<_, _>>()?)
}

/// Field cursor over one record.
struct Fields<'a> {
    rec: &'a csv::StringRecord,
    names: Vec<&'a str>,
    at: usize,
}

impl<'a> Fields<'a> {
    fn new(rec: &'a csv::StringRecord, header: &'a str) -> Self {
        Self { rec, names: header.split(',').collect(), at: 0 }
    }

    fn raw(&mut self) -> Result<(&'a str, &'a str)> {
        let name = self.names.get(self.at).copied().unwrap_or("?");
        let value = self.rec.get(self.at).ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
        self.at += 1;
        Ok((name, value))
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let (name, value) = self.raw()?;
        value.trim().parse().map_err(|_| Error::InvalidValue { key: name.to_string(), value: value.to_string() })
    }

    fn scenario(&mut self) -> Result<ScenarioKey> {
        Ok(ScenarioKey {
            mutation_prob: self.parse()?,
            cross_immunity: self.parse()?,
            cross_protection: self.parse()?,
            isolate_symptomatic: self.parse()?,
            social_distancing: self.parse()?,
        })
    }
}

pub fn read_dataset<R: Read>(r: R) -> Result<SweepDataset> {
    let mut rows = Vec::new();
    for rec in records(r, DATASET_HEADER)? {
        let mut f = Fields::new(&rec, DATASET_HEADER);
        rows.push(MetricRow {
            scenario: f.scenario()?,
            replication: f.parse()?,
            step: f.parse()?,
            share_infected: f.parse()?,
            mortality: f.parse()?,
            cumulative_infected_share: f.parse()?,
            mean_r0: f.parse()?,
            mean_adapted_ratio: f.parse()?,
            max_antigenic_distance: f.parse()?,
            mean_phylo_distance: f.parse()?,
            mean_infectiousness: f.parse()?,
            mean_latent_end: f.parse()?,
            mean_incubation_end: f.parse()?,
            mean_duration: f.parse()?,
            mean_symptomatic_chance: f.parse()?,
            mean_fatality: f.parse()?,
            active_variant_count: f.parse()?,
            extinct: f.parse()?,
        });
    }
    Ok(SweepDataset { rows })
}

pub fn read_quantiles<R: Read>(r: R) -> Result<Vec<QuantileRow>> {
    records(r, QUANTILE_HEADER)?
        .iter()
        .map(|rec| {
            let mut f = Fields::new(rec, QUANTILE_HEADER);
            Ok(QuantileRow { scenario: f.scenario()?, step: f.parse()?, quantile: f.parse()?, value: f.parse()? })
        })
        .collect()
}

pub fn read_boxes<R: Read>(r: R) -> Result<Vec<BoxRow>> {
    records(r, BOX_HEADER)?
        .iter()
        .map(|rec| {
            let mut f = Fields::new(rec, BOX_HEADER);
            let scenario = f.scenario()?;
            let mut stats = BoxStats {
                median: f.parse()?,
                q1: f.parse()?,
                q3: f.parse()?,
                whisker_low: f.parse()?,
                whisker_high: f.parse()?,
                notch_low: f.parse()?,
                notch_high: f.parse()?,
                outliers: Vec::new(),
            };
            let (name, list) = f.raw()?;
            for x in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                stats
                    .outliers
                    .push(x.parse().map_err(|_| Error::InvalidValue { key: name.to_string(), value: x.to_string() })?);
            }
            Ok(BoxRow { scenario, stats })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{notched_box, quantile_series, sweep, SweepGrid, DEFAULT_QUANTILES};
    use super::*;
    use crate::params::SimParams;

    fn small_dataset() -> SweepDataset {
        let base = SimParams { n_agents: 300, horizon: 25, seed: 9, fatality0: 0.05, ..Default::default() };
        let g =
            SweepGrid::from_grid_str(base, "mutation_prob=0,0.03\nisolate_symptomatic=no,yes\nreplications=3").unwrap();
        sweep(&g).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let ds = small_dataset();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        assert!(buf.starts_with(DATASET_HEADER.as_bytes()));
        let back = read_dataset(&buf[..]).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn aggregates_round_trip() {
        let ds = small_dataset();
        let q = quantile_series(&ds, "mortality", &DEFAULT_QUANTILES).unwrap();
        let mut buf = Vec::new();
        write_quantiles(&mut buf, &q).unwrap();
        assert_eq!(read_quantiles(&buf[..]).unwrap(), q);

        let b = notched_box(&ds, "share_infected", 25).unwrap();
        let mut buf = Vec::new();
        write_boxes(&mut buf, &b).unwrap();
        assert_eq!(read_boxes(&buf[..]).unwrap(), b);
    }

    #[test]
    fn outliers_are_semicolon_joined() {
        let key = ScenarioKey::of(&SimParams::default());
        let rows = vec![BoxRow { scenario: key, stats: super::super::box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]) }];
        let mut buf = Vec::new();
        write_boxes(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",100"), "{text}");
        assert_eq!(read_boxes(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn schema_mismatch() {
        let err = read_dataset("a,b,c\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        let bad = format!("{DATASET_HEADER}\n0,0.5,0.99,false,0,0,1,x,0,0,0,0,0,0,0,0,0,0,0,0,1,false\n");
        assert!(matches!(read_dataset(bad.as_bytes()), Err(Error::InvalidValue { .. })));
    }

    #[test]
    fn manifest_lists_every_replication() {
        let g = SweepGrid::from_grid_str(SimParams::default(), "cross_immunity=0,1\nreplications=2").unwrap();
        let mut buf = Vec::new();
        write_manifest(&mut buf, &g.manifest()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(3).unwrap().starts_with("1,0.01,1,0.99,false,0,0,"));
    }
}
