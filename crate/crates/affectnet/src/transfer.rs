//! Cross-task transfer: pretrain a network on binary sentiment, replace
//! the prediction layer with a freshly initialized one sized for the
//! affect task, then fine-tune on the affect data. Every non-head
//! parameter carries over bit-exactly; fine-tuning updates either the
//! whole network or only the new head, per the configured scope.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::layers::{AffectNetwork, TaskKind};
use crate::training::{train, FineTuneScope, NetworkSpec, RunResult, TaskCorpus, TrainConfig};

/// A sentiment source task, an affect target task, the shared vocabulary
/// they are encoded against, and the architecture to train.
#[derive(Debug, Clone)]
pub struct TransferPlan<'a> {
    pub vocabulary: &'a Vocabulary,
    /// Binary sentiment corpus (exactly two classes).
    pub source: &'a LabeledCorpus,
    pub target: &'a TaskCorpus,
    pub network: NetworkSpec,
    pub scope: FineTuneScope,
}

impl TransferPlan<'_> {
    fn validate(&self) -> Result<()> {
        if self.source.num_classes() != 2 {
            return Err(Error::InvalidArgument(format!(
                "sentiment source task must be binary, got {} classes",
                self.source.num_classes()
            )));
        }
        Ok(())
    }
}

/// Networks and run traces from one sent2affect execution.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    /// The network as it was after sentiment pretraining (sentiment head
    /// still attached).
    pub pretrained: AffectNetwork,
    /// The fine-tuned target model.
    pub transferred: AffectNetwork,
    pub source_result: RunResult,
    pub target_result: RunResult,
}

/// Trains the sentiment model: splits the source corpus, trains with
/// early stopping, evaluates on the held-out part.
pub fn pretrain(
    plan: &TransferPlan,
    cfg: &TrainConfig,
    split_ratio: f64,
    rng: &mut ChaCha8Rng,
    progress: &mut dyn FnMut(usize, f64, f64),
) -> Result<(AffectNetwork, RunResult)> {
    plan.validate()?;
    let source = TaskCorpus::Classification(plan.source.clone());
    let split_seed = rng.gen::<u64>();
    let (src_train, src_test) = source.split(split_ratio, split_seed)?;
    let mut net = plan.network.build(
        plan.vocabulary,
        TaskKind::Classification { classes: 2 },
        rng,
    )?;
    let pretrain_cfg = TrainConfig {
        seed: rng.gen::<u64>(),
        scope: FineTuneScope::Full,
        ..cfg.clone()
    };
    let result = train(&mut net, &src_train, Some(&src_test), &pretrain_cfg, progress)?;
    Ok((net, result))
}

/// Replaces the dense prediction layer with a randomly initialized one
/// sized for the target task; all other parameters carry over bit-exactly.
pub fn swap_head(
    net: &AffectNetwork,
    target: TaskKind,
    rng: &mut ChaCha8Rng,
) -> Result<AffectNetwork> {
    net.swap_head(target, rng)
}

/// Fine-tunes a head-swapped network on the target task under the given
/// scope (head only, or every parameter starting from the transferred
/// values).
pub fn fine_tune(
    net: &mut AffectNetwork,
    target_train: &TaskCorpus,
    target_test: Option<&TaskCorpus>,
    cfg: &TrainConfig,
    scope: FineTuneScope,
    progress: &mut dyn FnMut(usize, f64, f64),
) -> Result<RunResult> {
    let tune_cfg = TrainConfig {
        scope,
        ..cfg.clone()
    };
    train(net, target_train, target_test, &tune_cfg, progress)
}

/// The full pipeline under one seed: pretrain on sentiment, swap the
/// head, fine-tune on the target. The target corpus is split
/// `split_ratio` into fine-tune/test portions.
pub fn sent2affect(
    plan: &TransferPlan,
    source_cfg: &TrainConfig,
    target_cfg: &TrainConfig,
    split_ratio: f64,
    seed: u64,
    progress: &mut dyn FnMut(&str, usize, f64, f64),
) -> Result<TransferOutcome> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pretrained, source_result) = pretrain(
        plan,
        source_cfg,
        split_ratio,
        &mut rng,
        &mut |e, t, v| progress("source", e, t, v),
    )?;

    let target_split_seed = rng.gen::<u64>();
    let (tgt_train, tgt_test) = plan.target.split(split_ratio, target_split_seed)?;
    let mut transferred = swap_head(&pretrained, plan.target.task_kind(), &mut rng)?;
    let tune_cfg = TrainConfig {
        seed: rng.gen::<u64>(),
        ..target_cfg.clone()
    };
    let target_result = fine_tune(
        &mut transferred,
        &tgt_train,
        Some(&tgt_test),
        &tune_cfg,
        plan.scope,
        &mut |e, t, v| progress("target", e, t, v),
    )?;
    Ok(TransferOutcome {
        pretrained,
        transferred,
        source_result,
        target_result,
    })
}

/// Trains the target task from random initialization under the same seed
/// and target split as [`sent2affect`], for paired comparisons.
pub fn random_init_baseline(
    plan: &TransferPlan,
    target_cfg: &TrainConfig,
    split_ratio: f64,
    seed: u64,
    progress: &mut dyn FnMut(usize, f64, f64),
) -> Result<(AffectNetwork, RunResult)> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Consume the pretraining draws in the same order so the target split
    // matches the transferred arm exactly.
    let _source_split_seed = rng.gen::<u64>();
    let throwaway_net = plan.network.build(
        plan.vocabulary,
        TaskKind::Classification { classes: 2 },
        &mut rng,
    )?;
    drop(throwaway_net);
    let _pretrain_seed = rng.gen::<u64>();

    let target_split_seed = rng.gen::<u64>();
    let (tgt_train, tgt_test) = plan.target.split(split_ratio, target_split_seed)?;
    let mut net = plan
        .network
        .build(plan.vocabulary, plan.target.task_kind(), &mut rng)?;
    let cfg = TrainConfig {
        seed: rng.gen::<u64>(),
        scope: FineTuneScope::Full,
        ..target_cfg.clone()
    };
    let result = train(&mut net, &tgt_train, Some(&tgt_test), &cfg, progress)?;
    Ok((net, result))
}

/// Paired transferred-vs-scratch runs over consecutive seeds.
#[derive(Debug)]
pub struct TransferComparison {
    pub seeds: Vec<u64>,
    pub transferred: Vec<RunResult>,
    pub scratch: Vec<RunResult>,
}

impl TransferComparison {
    /// Count of pairs where the transferred arm reached the validation
    /// accuracy threshold in strictly fewer epochs than the scratch arm
    /// (never reaching counts as slower than any finite epoch).
    pub fn transferred_wins(&self, threshold: f64) -> usize {
        self.transferred
            .iter()
            .zip(&self.scratch)
            .filter(|(t, s)| {
                let t_epochs = t.epochs_to_val_accuracy(threshold).unwrap_or(usize::MAX);
                let s_epochs = s.epochs_to_val_accuracy(threshold).unwrap_or(usize::MAX);
                t_epochs < s_epochs
            })
            .count()
    }
}

pub fn compare_with_random_init(
    plan: &TransferPlan,
    source_cfg: &TrainConfig,
    target_cfg: &TrainConfig,
    split_ratio: f64,
    base_seed: u64,
    pairs: usize,
) -> Result<TransferComparison> {
    let mut comparison = TransferComparison {
        seeds: Vec::with_capacity(pairs),
        transferred: Vec::with_capacity(pairs),
        scratch: Vec::with_capacity(pairs),
    };
    for i in 0..pairs {
        let seed = base_seed.wrapping_add(i as u64);
        let outcome = sent2affect(
            plan,
            source_cfg,
            target_cfg,
            split_ratio,
            seed,
            &mut |_, _, _, _| {},
        )?;
        let (_, scratch) =
            random_init_baseline(plan, target_cfg, split_ratio, seed, &mut |_, _, _| {})?;
        comparison.seeds.push(seed);
        comparison.transferred.push(outcome.target_result);
        comparison.scratch.push(scratch);
    }
    Ok(comparison)
}
