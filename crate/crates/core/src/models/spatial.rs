//! Station coordinates and annual maxima read from, and written to, CSV.
//!
//! Stations file: header `station,x,y` (coordinates in km).
//! Maxima file: header `year,<station ids...>`, one row per year, no
//! missing values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::smith::{SmithData, SmithModel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialDataset {
    pub station_ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub years: Vec<i64>,
    /// Maxima in station-file column order.
    pub maxima: SmithData,
}

fn data_err(file: &str, row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Data {
        file: file.to_string(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn csv_err(file: &str, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    data_err(file, row, "-", e.to_string())
}

fn parse_f64(file: &str, row: usize, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| data_err(file, row, column, format!("non-numeric value {cell:?}")))?;
    if !v.is_finite() {
        return Err(data_err(file, row, column, format!("non-finite value {cell:?}")));
    }
    Ok(v)
}

impl SpatialDataset {
    pub fn load(stations: &Path, maxima: &Path) -> Result<Self> {
        let s = File::open(stations)
            .map_err(|e| Error::Io(format!("{}: {e}", stations.display())))?;
        let m = File::open(maxima).map_err(|e| Error::Io(format!("{}: {e}", maxima.display())))?;
        Self::from_readers(
            s,
            &stations.display().to_string(),
            m,
            &maxima.display().to_string(),
        )
    }

    pub fn from_readers(
        stations: impl Read,
        stations_name: &str,
        maxima: impl Read,
        maxima_name: &str,
    ) -> Result<Self> {
        let (station_ids, coords) = read_stations(stations, stations_name)?;
        let index: HashMap<&str, usize> = station_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();

        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(maxima);
        let header = rdr.headers().map_err(|e| csv_err(maxima_name, e))?.clone();
        if header.get(0).map(str::trim) != Some("year") {
            return Err(data_err(maxima_name, 1, "year", "first column must be `year`"));
        }
        let mut column_station = Vec::with_capacity(header.len() - 1);
        let mut seen = vec![false; station_ids.len()];
        for id in header.iter().skip(1) {
            let id = id.trim();
            let k = *index
                .get(id)
                .ok_or_else(|| data_err(maxima_name, 1, id, format!("unknown station id {id:?}")))?;
            if seen[k] {
                return Err(data_err(maxima_name, 1, id, format!("duplicated station id {id:?}")));
            }
            seen[k] = true;
            column_station.push(k);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(data_err(
                maxima_name,
                1,
                &station_ids[k],
                format!("station {:?} has no maxima column", station_ids[k]),
            ));
        }

        let q = station_ids.len();
        let mut years = Vec::new();
        let mut values = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let row = r + 2;
            let rec = rec.map_err(|e| csv_err(maxima_name, e))?;
            if rec.len() != q + 1 {
                return Err(data_err(
                    maxima_name,
                    row,
                    "-",
                    format!("expected {} cells, found {}", q + 1, rec.len()),
                ));
            }
            let year: i64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| data_err(maxima_name, row, "year", format!("non-integer year {:?}", &rec[0])))?;
            years.push(year);
            let mut line = vec![0.0; q];
            for (c, &k) in column_station.iter().enumerate() {
                line[k] = parse_f64(maxima_name, row, &station_ids[k], &rec[c + 1])?;
            }
            values.extend(line);
        }
        if years.is_empty() {
            return Err(data_err(maxima_name, 2, "-", "no yearly rows"));
        }
        Ok(SpatialDataset {
            station_ids,
            coords,
            years,
            maxima: SmithData::new(q, values)?,
        })
    }

    /// (years, stations).
    pub fn shape(&self) -> (usize, usize) {
        (self.maxima.n(), self.maxima.q)
    }

    pub fn model(&self) -> Result<SmithModel> {
        SmithModel::new(self.coords.clone(), self.maxima.n())
    }

    pub fn write_stations(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(["station", "x", "y"]).map_err(io)?;
        for (id, c) in self.station_ids.iter().zip(&self.coords) {
            wtr.write_record([id.clone(), c[0].to_string(), c[1].to_string()])
                .map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_maxima(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["year".to_string()];
        header.extend(self.station_ids.iter().cloned());
        wtr.write_record(&header).map_err(io)?;
        for (i, year) in self.years.iter().enumerate() {
            let mut rec = vec![year.to_string()];
            rec.extend(self.maxima.year(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save(&self, stations: &Path, maxima: &Path) -> Result<()> {
        self.write_stations(File::create(stations)?)?;
        self.write_maxima(File::create(maxima)?)
    }
}

fn read_stations(r: impl Read, file: &str) -> Result<(Vec<String>, Vec<[f64; 2]>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(|e| csv_err(file, e))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["station", "x", "y"] {
        return Err(data_err(file, 1, "-", format!("header must be `station,x,y`, found {names:?}")));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut coords = Vec::new();
    let mut seen = HashMap::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 2;
        let rec = rec.map_err(|e| csv_err(file, e))?;
        if rec.len() != 3 {
            return Err(data_err(file, row, "-", format!("expected 3 cells, found {}", rec.len())));
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(data_err(file, row, "station", "empty station id"));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(data_err(
                file,
                row,
                "station",
                format!("duplicated station id {id:?} (first on row {first})"),
            ));
        }
        let x = parse_f64(file, row, "x", &rec[1])?;
        let y = parse_f64(file, row, "y", &rec[2])?;
        ids.push(id);
        coords.push([x, y]);
    }
    if ids.is_empty() {
        return Err(data_err(file, 2, "-", "no stations"));
    }
    Ok((ids, coords))
}
