use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use super::{preprocess, RawDataset, Samples};
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionMode {
    Iid,
    Dirichlet { alpha: f64 },
}

/// Client id of every training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub n_clients: usize,
    pub mode: PartitionMode,
}

impl Partition {
    /// Per-client sample sets, rows kept in training-set order.
    pub fn shards(&self, train: &Samples) -> Vec<Samples> {
        let mut rows = vec![Vec::new(); self.n_clients];
        for (i, &c) in self.assignment.iter().enumerate() {
            rows[c].push(i);
        }
        rows.iter().map(|r| train.subset(r)).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clients];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Samples,
    pub test: Samples,
    pub partition: Partition,
}

/// Seeded stratified split followed by client partitioning of the train part.
pub fn split_and_partition(
    data: &Samples,
    test_fraction: f64,
    mode: PartitionMode,
    n_clients: usize,
    seed: u64,
) -> Result<Split> {
    if !(0.0..0.5).contains(&test_fraction) {
        return Err(Error::data(format!("test fraction {test_fraction} outside [0, 0.5)")));
    }
    let mut rng = seed::rng(seed, purpose::SPLIT, &[]);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for mut group in data.by_class() {
        group.shuffle(&mut rng);
        let n_test = (group.len() as f64 * test_fraction).round() as usize;
        test_rows.extend_from_slice(&group[..n_test]);
        train_rows.extend_from_slice(&group[n_test..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let train = data.subset(&train_rows);
    let test = data.subset(&test_rows);
    let partition = partition(&train, mode, n_clients, seed)?;
    Ok(Split { train, test, partition })
}

/// Assigns every sample of `train` to one of `n_clients` clients.
///
/// IID deals each class round-robin after a seeded shuffle, continuing the
/// dealer position across classes so shard sizes differ by at most one.
/// Dirichlet draws per-class client proportions from `Dir(alpha)`.
pub fn partition(train: &Samples, mode: PartitionMode, n_clients: usize, seed: u64) -> Result<Partition> {
    if n_clients == 0 {
        return Err(Error::data("no clients to partition over"));
    }
    let mut rng = seed::rng(seed, purpose::PARTITION, &[]);
    let mut assignment = vec![usize::MAX; train.len()];
    match mode {
        PartitionMode::Iid => {
            let mut dealer = 0;
            for (class, mut group) in train.by_class().into_iter().enumerate() {
                if !group.is_empty() && group.len() < n_clients {
                    return Err(Error::data(format!(
                        "class {class} has {} samples for {n_clients} clients",
                        group.len()
                    )));
                }
                group.shuffle(&mut rng);
                for i in group {
                    assignment[i] = dealer % n_clients;
                    dealer += 1;
                }
            }
        }
        PartitionMode::Dirichlet { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::data(format!("dirichlet alpha {alpha} must be positive")));
            }
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::data(e.to_string()))?;
            let groups = train.by_class();
            let mut ok = false;
            for _ in 0..100 {
                let mut sizes = vec![0usize; n_clients];
                for group in &groups {
                    let mut group = group.clone();
                    group.shuffle(&mut rng);
                    let draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
                    let total: f64 = draws.iter().sum();
                    let props: Vec<f64> = draws.iter().map(|d| d / total).collect();
                    let counts = apportion(group.len(), &props);
                    let mut next = 0;
                    for (client, &count) in counts.iter().enumerate() {
                        for &i in &group[next..next + count] {
                            assignment[i] = client;
                        }
                        sizes[client] += count;
                        next += count;
                    }
                }
                if sizes.iter().all(|&s| s > 0) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(Error::data(format!(
                    "dirichlet(alpha={alpha}) left a client empty in 100 draws"
                )));
            }
        }
    }
    let partition = Partition {
        assignment,
        n_clients,
        mode,
    };
    if let Some(c) = partition.sizes().iter().position(|&s| s == 0) {
        return Err(Error::data(format!("client {c} received no samples")));
    }
    Ok(partition)
}

/// Largest-remainder rounding of `total * weights` to integers summing to `total`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Seeded stratified subsample of `n` rows (all rows if `n >= len`).
pub fn stratified_subsample(data: &Samples, n: usize, seed: u64, stream: u64) -> Samples {
    if n >= data.len() {
        return data.clone();
    }
    let groups = data.by_class();
    let weights: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();
    let counts = apportion(n, &weights);
    let mut rng = seed::rng(seed, purpose::SUBSAMPLE, &[stream]);
    let mut rows = Vec::with_capacity(n);
    for (mut group, count) in groups.into_iter().zip(counts) {
        group.shuffle(&mut rng);
        rows.extend_from_slice(&group[..count]);
    }
    rows.sort_unstable();
    data.subset(&rows)
}

/// Knobs for turning raw IDX data into client shards and a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub class_set: Vec<u8>,
    pub test_fraction: f64,
    pub partition: PartitionMode,
    /// Training samples kept per client; `None` keeps everything.
    pub train_per_client: Option<usize>,
    /// Test samples kept; `None` keeps everything.
    pub test_samples: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            class_set: vec![0, 1, 2, 3],
            test_fraction: 0.2,
            partition: PartitionMode::Iid,
            train_per_client: Some(500),
            test_samples: Some(400),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub shards: Vec<Samples>,
    pub test: Samples,
    pub class_set: Vec<u8>,
}

impl PreparedData {
    /// All client shards in client order.
    pub fn pooled(&self) -> Samples {
        Samples::concat(&self.shards).expect("at least one shard")
    }
}

/// Full ingestion pipeline. With `standard_test` the test set comes from
/// that file and the training file is not split.
pub fn prepare(
    train_raw: &RawDataset,
    standard_test: Option<&RawDataset>,
    cfg: &DataConfig,
    n_clients: usize,
    seed: u64,
) -> Result<PreparedData> {
    let processed = preprocess(train_raw, &cfg.class_set)?;
    let (train, test) = match standard_test {
        Some(raw) => (processed.samples, preprocess(raw, &cfg.class_set)?.samples),
        None => {
            let split = split_and_partition(&processed.samples, cfg.test_fraction, PartitionMode::Iid, 1, seed)?;
            (split.train, split.test)
        }
    };
    let train = match cfg.train_per_client {
        Some(per) => stratified_subsample(&train, per * n_clients, seed, 0),
        None => train,
    };
    let test = match cfg.test_samples {
        Some(n) => stratified_subsample(&test, n, seed, 1),
        None => test,
    };
    if test.is_empty() {
        return Err(Error::data("empty test set"));
    }
    let partition = partition(&train, cfg.partition, n_clients, seed)?;
    Ok(PreparedData {
        shards: partition.shards(&train),
        test,
        class_set: processed.class_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, classes: usize) -> Samples {
        let mut s = Samples::new(2, classes);
        for i in 0..n {
            s.push(&[i as f64 / n as f64, 0.5], i % classes).unwrap();
        }
        s
    }

    #[test]
    fn iid_even_shards() {
        let data = toy(150, 4);
        let split = split_and_partition(&data, 0.0, PartitionMode::Iid, 15, 1).unwrap();
        assert_eq!(split.partition.sizes(), vec![10; 15]);
        assert!(split.test.is_empty());
    }

    #[test]
    fn same_seed_same_assignment() {
        let data = toy(400, 4);
        let a = split_and_partition(&data, 0.2, PartitionMode::Iid, 15, 8).unwrap();
        let b = split_and_partition(&data, 0.2, PartitionMode::Iid, 15, 8).unwrap();
        assert_eq!(a, b);
        let c = split_and_partition(&data, 0.2, PartitionMode::Iid, 15, 9).unwrap();
        assert_ne!(a.partition.assignment, c.partition.assignment);
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        // features encode the row id, so disjointness is checkable by value
        let data = toy(1000, 4);
        let split = split_and_partition(&data, 0.2, PartitionMode::Iid, 5, 3).unwrap();
        assert_eq!(split.test.len(), 200);
        let key = |s: &Samples, i: usize| (s.features(i)[0] * 1000.0).round() as usize;
        let mut seen = vec![false; 1000];
        for i in 0..split.test.len() {
            seen[key(&split.test, i)] = true;
        }
        let shards = split.partition.shards(&split.train);
        let mut train_count = 0;
        for shard in &shards {
            for i in 0..shard.len() {
                let k = key(shard, i);
                assert!(!seen[k], "row {k} appears twice");
                seen[k] = true;
                train_count += 1;
            }
        }
        assert_eq!(train_count, split.train.len());
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn infeasible_iid_partition() {
        let data = toy(20, 4);
        assert!(matches!(
            split_and_partition(&data, 0.0, PartitionMode::Iid, 6, 0),
            Err(Error::Data(_))
        ));
        assert!(split_and_partition(&data, 0.6, PartitionMode::Iid, 2, 0).is_err());
    }

    #[test]
    fn dirichlet_large_alpha_approaches_iid() {
        // at alpha = 1000 every client's share of every class is ~1/K
        let data = toy(1500, 3);
        let k = 5;
        let mut sq_dev = 0.0;
        let mut cells = 0.0;
        for draw in 0..100 {
            let p = partition(&data, PartitionMode::Dirichlet { alpha: 1000.0 }, k, draw).unwrap();
            let mut counts = vec![[0.0f64; 3]; k];
            for (i, &c) in p.assignment.iter().enumerate() {
                counts[c][data.label(i)] += 1.0;
            }
            for row in &counts {
                for &cnt in row {
                    sq_dev += (cnt / 500.0 - 1.0 / k as f64).powi(2);
                    cells += 1.0;
                }
            }
        }
        // Dir(alpha 1_K) marginal variance: (1/K)(1 - 1/K)/(K alpha + 1)
        let var = sq_dev / cells;
        let theory = 0.2 * 0.8 / (5.0 * 1000.0 + 1.0);
        assert!(var < 3.0 * theory + 1e-5, "variance {var}");
        // small alpha is visibly skewed
        let p = partition(&data, PartitionMode::Dirichlet { alpha: 0.1 }, k, 1).unwrap();
        let sizes = p.sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 100);
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.5, 0.5]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn subsample_is_stratified() {
        let data = toy(1000, 4);
        let sub = stratified_subsample(&data, 100, 2, 0);
        assert_eq!(sub.len(), 100);
        assert!(sub.by_class().iter().all(|g| g.len() == 25));
    }
}
