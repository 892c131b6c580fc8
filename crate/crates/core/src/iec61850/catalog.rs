//! Static catalog of 5G-enabled smart-grid service categories and the
//! message-class to slice mapping.

use super::{Iec61850Error, SliceId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCatalogEntry {
    pub category: String,
    pub latency: String,
    pub reliability: String,
    pub bandwidth: String,
    pub node_density: String,
    pub service_priority: String,
    pub sst_values: Vec<u8>,
}

fn entry(
    category: &str,
    latency: &str,
    reliability: &str,
    bandwidth: &str,
    node_density: &str,
    service_priority: &str,
    sst_values: &[u8],
) -> ServiceCatalogEntry {
    ServiceCatalogEntry {
        category: category.to_string(),
        latency: latency.to_string(),
        reliability: reliability.to_string(),
        bandwidth: bandwidth.to_string(),
        node_density: node_density.to_string(),
        service_priority: service_priority.to_string(),
        sst_values: sst_values.to_vec(),
    }
}

/// The five service categories with their slice requirements.
pub fn service_catalog() -> Vec<ServiceCatalogEntry> {
    vec![
        entry(
            "Smart distribution automation",
            "Low",
            "High",
            "Low",
            "Medium/Low",
            "High",
            &[2],
        ),
        entry(
            "Wide-area monitoring, control, and protection",
            "Low/Medium",
            "High/Medium",
            "Medium/Low",
            "Medium",
            "Medium/High",
            &[1, 2, 3],
        ),
        entry(
            "Metering data acquisition",
            "Medium/High",
            "Medium/Low",
            "Medium/High",
            "High",
            "Low/Medium",
            &[3],
        ),
        entry(
            "Distributed generation integration and microgrids",
            "Low/Medium",
            "High",
            "Low",
            "Medium/High",
            "Medium/High",
            &[2, 3],
        ),
        entry(
            "Volume and price balancing",
            "Medium/High",
            "Medium/Low",
            "Medium/High",
            "Medium/High",
            "Low",
            &[1, 3],
        ),
    ]
}

/// Maps an IEC 61850 message-class tag to its slice and SST.
///
/// Recognized tags: `type1-trip` (protection commands), `sv-stream`
/// (sampled-value streams), `report` and `file-transfer` (client/server
/// traffic). Unknown tags are an explicit error, never silently defaulted.
pub fn classify_message(tag: &str) -> Result<(SliceId, u8), Iec61850Error> {
    let slice = match tag {
        "type1-trip" | "type6-timesync" => SliceId::Goose,
        "sv-stream" => SliceId::Sv,
        "report" | "file-transfer" => SliceId::Mms,
        other => return Err(Iec61850Error::Unclassified(other.to_string())),
    };
    Ok((slice, slice.sst()))
}

const CATALOG_HEADER: &str =
    "category,latency,reliability,bandwidth,node_density,service_priority,sst_values";

/// Exports the catalog as CSV mirroring the catalog's columns. SST values
/// are joined with '/' inside one cell; the category cell is quoted because
/// category names contain commas.
pub fn catalog_to_csv(entries: &[ServiceCatalogEntry]) -> String {
    let mut out = String::from(CATALOG_HEADER);
    out.push('\n');
    for e in entries {
        let ssts: Vec<String> = e.sst_values.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{},{}\n",
            e.category,
            e.latency,
            e.reliability,
            e.bandwidth,
            e.node_density,
            e.service_priority,
            ssts.join("/")
        ));
    }
    out
}

pub fn catalog_from_csv(text: &str) -> Result<Vec<ServiceCatalogEntry>, Iec61850Error> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Iec61850Error::Catalog("empty csv".into()))?;
    if header != CATALOG_HEADER {
        return Err(Iec61850Error::Catalog(format!("bad header '{header}'")));
    }
    let mut out = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix('"')
            .ok_or_else(|| Iec61850Error::Catalog(format!("missing quoted category: {line}")))?;
        let (category, tail) = rest
            .split_once('"')
            .ok_or_else(|| Iec61850Error::Catalog(format!("unterminated quote: {line}")))?;
        let fields: Vec<&str> = tail
            .strip_prefix(',')
            .ok_or_else(|| Iec61850Error::Catalog(format!("bad row: {line}")))?
            .split(',')
            .collect();
        if fields.len() != 6 {
            return Err(Iec61850Error::Catalog(format!(
                "expected 6 fields after category, got {}",
                fields.len()
            )));
        }
        let sst_values = fields[5]
            .split('/')
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|_| Iec61850Error::Catalog(format!("bad sst '{s}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(ServiceCatalogEntry {
            category: category.to_string(),
            latency: fields[0].to_string(),
            reliability: fields[1].to_string(),
            bandwidth: fields[2].to_string(),
            node_density: fields[3].to_string(),
            service_priority: fields[4].to_string(),
            sst_values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_exactly_five_rows() {
        assert_eq!(service_catalog().len(), 5);
    }

    #[test]
    fn distribution_automation_row() {
        let catalog = service_catalog();
        let row = &catalog[0];
        assert_eq!(row.category, "Smart distribution automation");
        assert_eq!(row.latency, "Low");
        assert_eq!(row.reliability, "High");
        assert_eq!(row.sst_values, vec![2]);
    }

    #[test]
    fn metering_row() {
        let catalog = service_catalog();
        let row = &catalog[2];
        assert_eq!(row.category, "Metering data acquisition");
        assert_eq!(row.node_density, "High");
        assert_eq!(row.sst_values, vec![3]);
    }

    #[test]
    fn volume_and_price_row() {
        let catalog = service_catalog();
        let row = &catalog[4];
        assert_eq!(row.category, "Volume and price balancing");
        assert_eq!(row.sst_values, vec![1, 3]);
    }

    #[test]
    fn classification() {
        assert_eq!(classify_message("type1-trip").unwrap(), (SliceId::Goose, 2));
        assert_eq!(classify_message("sv-stream").unwrap(), (SliceId::Sv, 2));
        assert_eq!(classify_message("report").unwrap(), (SliceId::Mms, 3));
        assert!(matches!(
            classify_message("mystery"),
            Err(Iec61850Error::Unclassified(_))
        ));
    }

    #[test]
    fn catalog_csv_roundtrip_field_for_field() {
        let catalog = service_catalog();
        let csv = catalog_to_csv(&catalog);
        let back = catalog_from_csv(&csv).unwrap();
        assert_eq!(catalog, back);
    }
}
