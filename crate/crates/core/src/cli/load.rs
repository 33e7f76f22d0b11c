use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::classifiers::{
    load_decision_tree, load_naive_bayes, load_tabulated, ClassifierHandle, ExternalClassifier,
    ExternalConfig, Transport,
};
use crate::engine::CipConfig;
use crate::model::{load_empirical_distribution, Entity, PopulationDistribution};
use crate::speclang::{parse_spec, SpecDocument};

use super::args::{CommonArgs, DistSource};
use super::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierRef {
    Tree(PathBuf),
    NaiveBayes(PathBuf),
    Table(PathBuf),
    External { program: String, args: Vec<String> },
    Http(String),
}

impl FromStr for ClassifierRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(Self::Http(s.to_owned()));
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("classifier `{s}` is not KIND:PATH"))?;
        if rest.is_empty() {
            return Err(format!("classifier `{s}` has an empty path"));
        }
        match kind {
            "tree" => Ok(Self::Tree(rest.into())),
            "nb" | "naive-bayes" => Ok(Self::NaiveBayes(rest.into())),
            "table" => Ok(Self::Table(rest.into())),
            "external" => {
                let mut words = rest.split_whitespace().map(str::to_owned);
                let program = words.next().ok_or_else(|| format!("classifier `{s}` has no command"))?;
                Ok(Self::External {
                    program,
                    args: words.collect(),
                })
            }
            "http" => Ok(Self::Http(rest.to_owned())),
            other => Err(format!(
                "unknown classifier kind `{other}` (tree|nb|table|external|http)"
            )),
        }
    }
}

/// Falls back to `path.ext` when `path` itself does not exist.
fn resolve(path: &Path, ext: &str) -> PathBuf {
    if path.exists() || path.extension().is_some() {
        return path.to_path_buf();
    }
    let with_ext = path.with_extension(ext);
    if with_ext.exists() {
        with_ext
    } else {
        path.to_path_buf()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) struct Session {
    pub doc: SpecDocument,
    pub entity_name: String,
    pub entity: Entity,
    classifiers: Vec<ClassifierHandle>,
}

impl Session {
    pub fn open(args: &CommonArgs, expected: usize) -> Result<Self, CliError> {
        if args.classifiers.len() != expected {
            return Err(CliError::Usage(format!(
                "expected {expected} --classifier argument(s), got {}",
                args.classifiers.len()
            )));
        }
        let doc = parse_spec(&read(&args.spec)?)?;
        let (entity_name, entity) = match &args.entity {
            Some(name) => {
                let e = doc
                    .entity(name)
                    .ok_or_else(|| CliError::Usage(format!("entity `{name}` is not declared in the spec file")))?;
                (name.clone(), e.clone())
            }
            None => match doc.entities() {
                [(name, e)] => (name.clone(), e.clone()),
                [] => return Err(CliError::Usage("the spec file declares no entity".into())),
                _ => return Err(CliError::Usage("the spec file declares several entities; pass --entity".into())),
            },
        };
        let classifiers = args
            .classifiers
            .iter()
            .map(|r| load_classifier(&doc, r, args))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            doc,
            entity_name,
            entity,
            classifiers,
        })
    }

    pub fn classifier(&self, i: usize) -> &ClassifierHandle {
        &self.classifiers[i]
    }

    pub fn cip_config(&self, args: &CommonArgs) -> CipConfig {
        CipConfig {
            target: args.target.clone(),
            max_changes: args.max_changes,
            minimality: args.minimality,
            constraints: self.doc.constraints().to_vec(),
            budget: args.budget,
            parallelism: args.parallelism,
            strict: args.strict,
        }
    }

    pub fn distribution(&self, args: &CommonArgs) -> Result<PopulationDistribution<f64>, CliError> {
        let schema = self.doc.schema();
        Ok(match &args.dist {
            DistSource::Uniform => PopulationDistribution::uniform(schema),
            DistSource::Marginals => self.doc.distribution(),
            DistSource::Empirical(path) => {
                let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                load_empirical_distribution(schema, file)?
            }
        })
    }
}

fn load_classifier(
    doc: &SpecDocument,
    r: &ClassifierRef,
    args: &CommonArgs,
) -> Result<ClassifierHandle, CliError> {
    let schema = doc.schema();
    Ok(match r {
        ClassifierRef::Tree(p) => load_decision_tree(&read(&resolve(p, "json"))?, schema)?,
        ClassifierRef::NaiveBayes(p) => load_naive_bayes(&read(&resolve(p, "json"))?, schema)?,
        ClassifierRef::Table(p) => {
            let path = resolve(p, "csv");
            let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
            load_tabulated(file, schema)?
        }
        ClassifierRef::External { .. } | ClassifierRef::Http(_) => {
            if args.classes.is_empty() {
                return Err(CliError::Usage(
                    "external classifiers need --classes with their class list".into(),
                ));
            }
            let transport = match r {
                ClassifierRef::External { program, args } => Transport::Subprocess {
                    program: program.clone(),
                    args: args.clone(),
                },
                ClassifierRef::Http(url) => Transport::Http { url: url.clone() },
                _ => unreachable!(),
            };
            let mut config = ExternalConfig {
                window: args.window,
                cache: !args.no_cache,
                ..ExternalConfig::default()
            };
            if let Some(ms) = args.timeout_ms {
                config.timeout = Duration::from_millis(ms);
            }
            let ext = ExternalClassifier::connect(schema.clone(), args.classes.clone(), transport, config)?;
            ClassifierHandle::from_external(ext)
        }
    })
}
