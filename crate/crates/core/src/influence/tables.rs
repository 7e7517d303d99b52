//! CSV forms of the influence inputs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use super::{CenterId, Municipality, RelationCategory, RelationOrder, RelationRecord, UrbanCenter};
use crate::graph::VertexId;
use crate::io::{read_table, Collector, InputError};

pub const MUNICIPALITIES_HEADER: [&str; 3] = ["id", "name", "population"];
pub const CENTERS_HEADER: [&str; 2] = ["center_id", "municipality_id"];
pub const RELATIONS_HEADER: [&str; 5] = ["from_center", "to_center", "category", "dimension", "order"];

pub fn read_municipalities<R: Read>(reader: R, file: &str) -> Result<Vec<Municipality>, InputError> {
    let rows = read_table(reader, file, &MUNICIPALITIES_HEADER)?;
    let mut errors = Collector::new(file);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let id = match VertexId::new(row.get(0)) {
            Ok(id) => id,
            Err(e) => {
                errors.push(row.line, e.to_string());
                continue;
            }
        };
        let population = match row.get(2).parse::<u64>() {
            Ok(p) if p >= 1 => p,
            _ => {
                errors.push(
                    row.line,
                    format!("population `{}` must be a positive integer", row.get(2)),
                );
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            errors.push(row.line, format!("duplicate municipality id `{id}`"));
            continue;
        }
        out.push(Municipality {
            id,
            name: row.get(1).to_owned(),
            population,
        });
    }
    errors.finish()?;
    Ok(out)
}

/// Groups `center_id,municipality_id` rows into centers, in first-seen order.
pub fn read_centers<R: Read>(reader: R, file: &str) -> Result<Vec<UrbanCenter>, InputError> {
    let rows = read_table(reader, file, &CENTERS_HEADER)?;
    let mut errors = Collector::new(file);
    let mut order: Vec<CenterId> = Vec::new();
    let mut members: HashMap<CenterId, Vec<VertexId>> = HashMap::new();
    let mut owner: HashMap<VertexId, CenterId> = HashMap::new();
    for row in rows {
        let center = row.get(0);
        if center.is_empty() {
            errors.push(row.line, "center_id must not be empty");
            continue;
        }
        let center = CenterId(center.to_owned());
        let muni = match VertexId::new(row.get(1)) {
            Ok(m) => m,
            Err(e) => {
                errors.push(row.line, e.to_string());
                continue;
            }
        };
        if let Some(prev) = owner.get(&muni) {
            if prev == &center {
                errors.push(row.line, format!("municipality `{muni}` listed twice in center `{center}`"));
            } else {
                errors.push(
                    row.line,
                    format!("municipality `{muni}` already belongs to center `{prev}`"),
                );
            }
            continue;
        }
        owner.insert(muni.clone(), center.clone());
        members
            .entry(center.clone())
            .or_insert_with(|| {
                order.push(center.clone());
                Vec::new()
            })
            .push(muni);
    }
    errors.finish()?;
    Ok(order
        .into_iter()
        .map(|c| UrbanCenter {
            members: members.remove(&c).unwrap_or_default(),
            center_id: c,
        })
        .collect())
}

pub fn read_relations<R: Read>(reader: R, file: &str) -> Result<Vec<RelationRecord>, InputError> {
    let rows = read_table(reader, file, &RELATIONS_HEADER)?;
    let mut errors = Collector::new(file);
    let mut seen: BTreeMap<(String, String, RelationCategory, String), u64> = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let (from, to) = (row.get(0), row.get(1));
        if from.is_empty() || to.is_empty() {
            errors.push(row.line, "from_center and to_center must not be empty");
            continue;
        }
        if from == to {
            errors.push(row.line, format!("center `{from}` cannot influence itself"));
            continue;
        }
        let Some(category) = RelationCategory::parse(row.get(2)) else {
            errors.push(
                row.line,
                format!(
                    "category `{}` must be one of goods_services, metro_link, full_link",
                    row.get(2)
                ),
            );
            continue;
        };
        let (dimension, order) = if category == RelationCategory::FullLink {
            (String::new(), None)
        } else {
            let dimension = row.get(3);
            if dimension.is_empty() {
                errors.push(row.line, format!("{} relation needs a dimension", category.as_str()));
                continue;
            }
            let order = row.get(4).parse::<u8>().ok().and_then(RelationOrder::new);
            if order.is_none() {
                errors.push(row.line, format!("order `{}` must be 1, 2 or 3", row.get(4)));
                continue;
            }
            (dimension.to_owned(), order)
        };
        let key = (from.to_owned(), to.to_owned(), category, dimension.clone());
        if let Some(first) = seen.insert(key, row.line) {
            errors.push(
                row.line,
                format!("duplicate relation {from} -> {to} ({}) first seen on line {first}", category.as_str()),
            );
            continue;
        }
        out.push(RelationRecord {
            from_center: CenterId(from.to_owned()),
            to_center: CenterId(to.to_owned()),
            category,
            dimension,
            order,
        });
    }
    errors.finish()?;
    Ok(out)
}

pub fn write_municipalities<W: Write>(municipalities: &[Municipality], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MUNICIPALITIES_HEADER)?;
    for m in municipalities {
        w.write_record([m.id.as_str(), &m.name, &m.population.to_string()])?;
    }
    w.flush()
}

pub fn write_centers<W: Write>(centers: &[UrbanCenter], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CENTERS_HEADER)?;
    for c in centers {
        for m in &c.members {
            w.write_record([c.center_id.0.as_str(), m.as_str()])?;
        }
    }
    w.flush()
}

pub fn write_relations<W: Write>(relations: &[RelationRecord], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RELATIONS_HEADER)?;
    for r in relations {
        let order = r.order.map(|o| o.get().to_string()).unwrap_or_default();
        w.write_record([
            r.from_center.0.as_str(),
            r.to_center.0.as_str(),
            r.category.as_str(),
            &r.dimension,
            &order,
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(err: InputError) -> Vec<u64> {
        match err {
            InputError::Validation(v) => v.iter().map(|e| e.line).collect(),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn municipalities_validate_population_and_ids() {
        let text = "id,name,population\na,Alpha,10\nb,Beta,0\nc,Gamma,x\na,Again,5\n,Blank,3\n";
        assert_eq!(lines(read_municipalities(text.as_bytes(), "m.csv").unwrap_err()), vec![3, 4, 5, 6]);
        let ok = read_municipalities("id,name,population\na,\"Alpha, City\",10\n".as_bytes(), "m.csv").unwrap();
        assert_eq!(ok[0].name, "Alpha, City");
    }

    #[test]
    fn centers_group_members() {
        let text = "center_id,municipality_id\nC1,a\nC2,b\nC1,c\n";
        let cs = read_centers(text.as_bytes(), "c.csv").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].members.len(), 2);
        let bad = "center_id,municipality_id\nC1,a\nC2,a\nC1,a\n";
        assert_eq!(lines(read_centers(bad.as_bytes(), "c.csv").unwrap_err()), vec![3, 4]);
    }

    #[test]
    fn relations_parse_categories_and_orders() {
        let text = "from_center,to_center,category,dimension,order\n\
                    A,B,goods_services,airport,2\n\
                    M,B,full_link,,\n\
                    A,B,goods_services,airport,1\n\
                    A,B,metro_link,airway links,4\n\
                    A,A,goods_services,airport,1\n\
                    A,B,bogus,x,1\n\
                    A,B,goods_services,,1\n";
        assert_eq!(lines(read_relations(text.as_bytes(), "r.csv").unwrap_err()), vec![4, 5, 6, 7, 8]);
        let ok = read_relations(
            "from_center,to_center,category,dimension,order\nM,B,full_link,,\nA,B,goods_services,airport,3\n"
                .as_bytes(),
            "r.csv",
        )
        .unwrap();
        assert_eq!(ok[0].order, None);
        assert_eq!(ok[1].order, RelationOrder::new(3));
    }

    #[test]
    fn writers_produce_readable_tables() {
        let text = "from_center,to_center,category,dimension,order\nM,B,full_link,,\nA,B,goods_services,airport,3\n";
        let rs = read_relations(text.as_bytes(), "r.csv").unwrap();
        let mut out = Vec::new();
        write_relations(&rs, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
