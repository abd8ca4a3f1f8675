//! Implementations of the subcommands.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::allotax::{rtd_contributions, top_divergent_terms, Side};
use crate::analytics::{
    assign_post_valence, assign_user_judgements, cumulative_positive_ratio,
    negativity_comment_fraction, popularity_significance, tally_users, Judge, PostJudgement,
};
use crate::awry::{evaluate_awry, load_conversations, predict_offline, predict_online};
use crate::classify::{
    cross_validate, cross_validate_vectors, load_external_predictions, load_feature_vectors,
    nb_train, ExternalPredictions, FoldReport, LogRegConfig, NbModel,
};
use crate::demographics::{build_demo_dataset, demo_contingency, demo_regression, Attribution};
use crate::ingest::{
    filter_corpus, parse_comments, parse_posts, write_comments, write_posts, CorpusFilter,
};
use crate::labels::{build_labeled_corpus, Valence};
use crate::stats::{chi_square_phi, lorenz_gini};
use crate::text::{tokenize, TermDistribution};

use super::io::{
    atomic_write, corpus_comments_path, corpus_posts_path, csv_bytes, load_corpus_threads,
    load_labeled, save_labeled, write_manifest, FORMAT_VERSION,
};
use super::{
    parse_date_bound, resolve_out, AllotaxArgs, AwryArgs, AwryMode, ClassifyArgs, CliError,
    DemographicsArgs, EvalArgs, IngestArgs, LabelArgs, PopularityArgs, TrainArgs, UsersArgs,
};

fn config_json<T: serde::Serialize>(args: &T) -> Result<serde_json::Value, CliError> {
    Ok(serde_json::to_value(args)?)
}

pub fn run_ingest(args: IngestArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let filter = CorpusFilter {
        date_from: args.from.as_deref().map(|s| parse_date_bound(s, false)).transpose()?,
        date_to: args.to.as_deref().map(|s| parse_date_bound(s, true)).transpose()?,
        min_comments: args.min_comments,
        subreddits: args.subreddits.as_deref().map(|s| {
            s.split(',')
                .map(|sub| sub.trim().to_string())
                .filter(|sub| !sub.is_empty())
                .collect()
        }),
    };

    let posts = parse_posts(BufReader::new(fs::File::open(&args.posts)?))?;
    let comments = parse_comments(BufReader::new(fs::File::open(&args.comments)?))?;
    let post_stats = posts.stats.clone();
    let comment_stats = comments.stats.clone();
    let built = crate::ingest::build_threads(posts.posts, comments.comments);
    let build_stats = built.stats.clone();
    let threads = filter_corpus(built.threads, &filter);

    // Persist the filtered corpus back in dump schema, thread order.
    let kept_posts: Vec<_> = threads.iter().map(|t| t.post.clone()).collect();
    let mut kept_comments = Vec::new();
    for thread in &threads {
        for node in thread.nodes() {
            kept_comments.push(node.comment.clone());
        }
    }
    let mut posts_buf = Vec::new();
    write_posts(&mut posts_buf, &kept_posts)?;
    atomic_write(&corpus_posts_path(&out), &posts_buf)?;
    let mut comments_buf = Vec::new();
    write_comments(&mut comments_buf, &kept_comments)?;
    atomic_write(&corpus_comments_path(&out), &comments_buf)?;

    let mut per_subreddit: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for thread in &threads {
        let entry = per_subreddit.entry(thread.post.subreddit.clone()).or_default();
        entry.0 += 1;
        entry.1 += thread.comment_count() as u64;
    }
    let index = json!({
        "format_version": FORMAT_VERSION,
        "threads": threads.len(),
        "comments": kept_comments.len(),
        "per_subreddit": per_subreddit
            .iter()
            .map(|(s, (p, c))| (s.clone(), json!({"threads": p, "comments": c})))
            .collect::<serde_json::Map<_, _>>(),
    });
    atomic_write(&out.join("index.json"), &serde_json::to_vec_pretty(&index)?)?;

    let report = format!(
        "ingestion report\n\
         posts: parsed {} malformed {} missing-score {}\n\
         comments: parsed {} malformed {} missing-score {}\n\
         threads: excluded-comments {} duplicates {} orphans {} cycles {}\n\
         retained threads after filter: {} ({} comments)\n",
        post_stats.parsed,
        post_stats.malformed,
        post_stats.missing_score,
        comment_stats.parsed,
        comment_stats.malformed,
        comment_stats.missing_score,
        build_stats.excluded,
        build_stats.duplicates,
        build_stats.orphans,
        build_stats.cycles,
        threads.len(),
        kept_comments.len(),
    );
    atomic_write(&out.join("ingest_report.txt"), report.as_bytes())?;
    write_manifest(
        &out,
        "ingest",
        config_json(&args)?,
        json!({
            "posts": post_stats,
            "comments": comment_stats,
            "threads": build_stats,
            "retained_threads": threads.len(),
        }),
    )?;
    println!("{report}");
    Ok(())
}

pub fn run_label(args: LabelArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let threads = load_corpus_threads(&args.corpus)?;
    let (labeled, histogram) = build_labeled_corpus(&threads);
    save_labeled(&out.join("labeled.ndjson"), &labeled)?;

    let report = format!(
        "label histogram (top-level comments)\n\
         NTA  Not the Asshole      {}\n\
         YTA  You're the Asshole   {}\n\
         NAH  No assholes here     {}\n\
         ESH  Everyone sucks here  {}\n\
         dropped: INFO {}  no-prefix {}\n\
         labeled corpus size: {} (positive {}, negative {})\n",
        histogram.nta,
        histogram.yta,
        histogram.nah,
        histogram.esh,
        histogram.info,
        histogram.no_prefix,
        histogram.emitted(),
        histogram.positive(),
        histogram.negative(),
    );
    atomic_write(&out.join("label_report.txt"), report.as_bytes())?;
    write_manifest(&out, "label", config_json(&args)?, json!({ "histogram": histogram }))?;
    println!("{report}");
    Ok(())
}

fn fold_report_csv(model: &str, report: &FoldReport) -> Result<Vec<u8>, CliError> {
    csv_bytes(|w| {
        w.write_record([
            "model",
            "accuracy_mean", "accuracy_std",
            "precision_mean", "precision_std",
            "recall_mean", "recall_std",
            "f1_mean", "f1_std",
            "fpr_mean", "fpr_std",
        ])?;
        w.write_record([
            model.to_string(),
            report.mean.accuracy.to_string(), report.std.accuracy.to_string(),
            report.mean.precision.to_string(), report.std.precision.to_string(),
            report.mean.recall.to_string(), report.std.recall.to_string(),
            report.mean.f1.to_string(), report.std.f1.to_string(),
            report.mean.fpr.to_string(), report.std.fpr.to_string(),
        ])?;
        Ok(())
    })
}

fn fold_detail_csv(report: &FoldReport) -> Result<Vec<u8>, CliError> {
    csv_bytes(|w| {
        w.write_record(["fold", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1", "fpr"])?;
        for (i, m) in report.per_fold.iter().enumerate() {
            w.write_record([
                i.to_string(),
                m.tp.to_string(), m.fp.to_string(), m.fn_.to_string(), m.tn.to_string(),
                m.accuracy.to_string(), m.precision.to_string(), m.recall.to_string(),
                m.f1.to_string(), m.fpr.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn fold_summary_line(model: &str, report: &FoldReport) -> String {
    format!(
        "{model}: accuracy {:.2} \u{00B1} {:.2} | precision {:.2} \u{00B1} {:.2} | recall {:.2} \u{00B1} {:.2} | f1 {:.2} \u{00B1} {:.2} | fpr {:.2} \u{00B1} {:.2}",
        report.mean.accuracy, report.std.accuracy,
        report.mean.precision, report.std.precision,
        report.mean.recall, report.std.recall,
        report.mean.f1, report.std.f1,
        report.mean.fpr, report.std.fpr,
    )
}

pub fn run_train(args: TrainArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    if args.model != "nb" {
        return Err(CliError::Usage(format!(
            "only `nb` trains natively, got {:?}",
            args.model
        )));
    }
    let labeled = load_labeled(&args.labeled)?;
    let mut summary = String::new();

    let cv = match args.folds {
        Some(folds) => {
            let alpha = args.alpha;
            let report = cross_validate(&labeled, folds, args.seed, move |train| {
                Ok(Box::new(nb_train(train, alpha)?))
            })?;
            atomic_write(&out.join("cv_report.csv"), &fold_report_csv("nb", &report)?)?;
            atomic_write(&out.join("cv_folds.csv"), &fold_detail_csv(&report)?)?;
            summary.push_str(&fold_summary_line("nb", &report));
            summary.push('\n');
            Some(report.mean)
        }
        None => None,
    };

    let model = nb_train(&labeled, args.alpha)?;
    let mut model_bytes = Vec::new();
    model.save(&mut model_bytes)?;
    atomic_write(&out.join("model.json"), &model_bytes)?;
    summary.push_str(&format!(
        "trained multinomial nb: {} documents, vocabulary {} terms, alpha {}\n",
        labeled.len(),
        model.vocab().len(),
        model.alpha(),
    ));
    atomic_write(&out.join("train_report.txt"), summary.as_bytes())?;
    write_manifest(
        &out,
        "train",
        config_json(&args)?,
        json!({
            "documents": labeled.len(),
            "vocabulary": model.vocab().len(),
            "seed": args.seed,
            "cv_mean": cv,
        }),
    )?;
    println!("{summary}");
    Ok(())
}

pub fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let labeled = load_labeled(&args.labeled)?;
    let report = match args.model.as_str() {
        "nb" => {
            let alpha = args.alpha;
            cross_validate(&labeled, args.folds, args.seed, move |train| {
                Ok(Box::new(nb_train(train, alpha)?))
            })?
        }
        "logreg" => {
            let features_path = args.features.as_ref().ok_or_else(|| {
                CliError::Usage("--model logreg requires --features".into())
            })?;
            let vectors = load_feature_vectors(BufReader::new(fs::File::open(features_path)?))?;
            let by_id: HashMap<&str, &Vec<f64>> = vectors
                .iter()
                .map(|v| (v.comment_id.as_str(), &v.values))
                .collect();
            let mut x = Vec::new();
            let mut y = Vec::new();
            for lc in &labeled {
                let Some(values) = by_id.get(lc.comment.id.as_str()) else {
                    return Err(CliError::Data(format!(
                        "no feature vector for comment {:?}",
                        lc.comment.id
                    )));
                };
                x.push((*values).clone());
                y.push(lc.valence);
            }
            cross_validate_vectors(&x, &y, args.folds, args.seed, LogRegConfig::default())?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model {other:?} (expected nb or logreg)"
            )))
        }
    };
    atomic_write(&out.join("cv_report.csv"), &fold_report_csv(&args.model, &report)?)?;
    atomic_write(&out.join("cv_folds.csv"), &fold_detail_csv(&report)?)?;
    let summary = fold_summary_line(&args.model, &report);
    atomic_write(&out.join("eval_report.txt"), format!("{summary}\n").as_bytes())?;
    write_manifest(
        &out,
        "eval",
        config_json(&args)?,
        json!({ "seed": args.seed, "folds": args.folds }),
    )?;
    println!("{summary}");
    Ok(())
}

/// Resolve the --model / --external pair shared by several commands.
enum LoadedJudge {
    Model(NbModel),
    External(ExternalPredictions),
}

impl LoadedJudge {
    fn load(model: &Option<PathBuf>, external: &Option<PathBuf>) -> Result<Self, CliError> {
        match (model, external) {
            (Some(path), None) => Ok(LoadedJudge::Model(NbModel::load(BufReader::new(
                fs::File::open(path)?,
            ))?)),
            (None, Some(path)) => Ok(LoadedJudge::External(load_external_predictions(
                BufReader::new(fs::File::open(path)?),
            )?)),
            _ => Err(CliError::Usage(
                "exactly one of --model or --external is required".into(),
            )),
        }
    }

    fn judge(&self) -> Judge<'_> {
        match self {
            LoadedJudge::Model(model) => Judge::Classifier(model),
            LoadedJudge::External(preds) => Judge::External(preds),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            LoadedJudge::Model(_) => "model",
            LoadedJudge::External(_) => "external",
        }
    }
}

fn judgements_csv(judgements: &[PostJudgement]) -> Result<Vec<u8>, CliError> {
    csv_bytes(|w| {
        w.write_record(["post_id", "subreddit", "score", "valence", "judge_comment_id"])?;
        for j in judgements {
            w.write_record([
                j.post_id.as_str(),
                j.subreddit.as_str(),
                &j.post_score.to_string(),
                j.valence.as_str(),
                j.judging_comment_id.as_str(),
            ])?;
        }
        Ok(())
    })
}

fn load_judgements_csv(path: &Path) -> Result<Vec<PostJudgement>, CliError> {
    let mut reader = csv::Reader::from_reader(BufReader::new(fs::File::open(path)?));
    let mut judgements = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Data(format!("judgements line {}: {e}", i + 2)))?;
        let get = |j: usize| row.get(j).unwrap_or("").to_string();
        let valence = Valence::parse(&get(3)).ok_or_else(|| {
            CliError::Data(format!("judgements line {}: bad valence {:?}", i + 2, get(3)))
        })?;
        judgements.push(PostJudgement {
            post_id: get(0),
            subreddit: get(1),
            post_score: get(2)
                .parse()
                .map_err(|e| CliError::Data(format!("judgements line {}: {e}", i + 2)))?,
            valence,
            judging_comment_id: get(4),
        });
    }
    Ok(judgements)
}

pub fn run_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let judge = LoadedJudge::load(&args.model, &args.external)?;
    let threads = load_corpus_threads(&args.corpus)?;
    let mut judgements = Vec::new();
    let mut skipped = 0u64;
    for thread in &threads {
        match assign_post_valence(thread, judge.judge()) {
            Some(j) => judgements.push(j),
            None => skipped += 1,
        }
    }
    atomic_write(&out.join("post_judgements.csv"), &judgements_csv(&judgements)?)?;
    write_manifest(
        &out,
        "classify",
        config_json(&args)?,
        json!({
            "judge": judge.describe(),
            "judged": judgements.len(),
            "skipped_threads": skipped,
        }),
    )?;
    println!("judged {} posts ({} skipped)", judgements.len(), skipped);
    Ok(())
}

pub fn run_allotax(args: AllotaxArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let labeled = load_labeled(&args.labeled)?;
    let mut positive_docs = Vec::new();
    let mut negative_docs = Vec::new();
    for lc in &labeled {
        let tokens = tokenize(&lc.comment.body);
        match lc.valence {
            Valence::Positive => positive_docs.push(tokens),
            Valence::Negative => negative_docs.push(tokens),
        }
    }
    let positive = TermDistribution::from_documents(&positive_docs);
    let negative = TermDistribution::from_documents(&negative_docs);

    for (name, dist) in [("positive", &positive), ("negative", &negative)] {
        let counts = csv_bytes(|w| {
            w.write_record(["term", "count"])?;
            for (term, count) in dist.iter() {
                w.write_record([term, &count.to_string()])?;
            }
            Ok(())
        })?;
        atomic_write(&out.join(format!("term_counts_{name}.csv")), &counts)?;
    }

    // Corpus 1 = negative class so two-sided listings lead with it.
    let result = rtd_contributions(&negative, &positive, args.alpha)?;

    let csv = csv_bytes(|w| {
        w.write_record(["term", "rank_pos", "rank_neg", "contribution", "side"])?;
        for c in &result.contributions {
            let side = if c.contribution > 0.0 {
                "negative"
            } else if c.contribution < 0.0 {
                "positive"
            } else {
                "tie"
            };
            // rank_1 is the negative-class rank, rank_2 the positive-class.
            w.write_record([
                c.term.as_str(),
                &c.rank_2.to_string(),
                &c.rank_1.to_string(),
                &c.contribution.to_string(),
                side,
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("rtd_terms.csv"), &csv)?;

    let mut report = format!(
        "rank-turbulence divergence (alpha = {}, total = {:.6})\n\nnegative-valence side:\n",
        args.alpha, result.total
    );
    for c in top_divergent_terms(&result, args.top_k, Side::Corpus1) {
        report.push_str(&format!("  {}  {:+.6e}\n", c.term, c.contribution));
    }
    report.push_str("\npositive-valence side:\n");
    for c in top_divergent_terms(&result, args.top_k, Side::Corpus2) {
        report.push_str(&format!("  {}  {:+.6e}\n", c.term, c.contribution));
    }
    atomic_write(&out.join("allotax_report.txt"), report.as_bytes())?;
    write_manifest(
        &out,
        "allotax",
        config_json(&args)?,
        json!({
            "rtd_alpha": args.alpha,
            "total_divergence": result.total,
            "normalization": result.normalization,
            "positive_documents": positive_docs.len(),
            "negative_documents": negative_docs.len(),
        }),
    )?;
    println!("{report}");
    Ok(())
}

pub fn run_popularity(args: PopularityArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let judgements = load_judgements_csv(&args.judgements)?;
    let mut by_subreddit: BTreeMap<String, Vec<PostJudgement>> = BTreeMap::new();
    for j in judgements {
        by_subreddit.entry(j.subreddit.clone()).or_default().push(j);
    }
    let report = popularity_significance(&by_subreddit);

    let tests_csv = csv_bytes(|w| {
        w.write_record([
            "subreddit", "n_positive", "n_negative", "u", "z",
            "p_two_tailed", "p_bonferroni", "effect_cles", "effect_rank_biserial",
        ])?;
        for row in &report.rows {
            w.write_record([
                row.subreddit.as_str(),
                &row.n_positive.to_string(),
                &row.n_negative.to_string(),
                &row.u.to_string(),
                &row.z.to_string(),
                &row.p_two_tailed.to_string(),
                &row.p_bonferroni.to_string(),
                &row.effect_cles.to_string(),
                &row.effect_rank_biserial.to_string(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("popularity_tests.csv"), &tests_csv)?;

    let curves_csv = csv_bytes(|w| {
        w.write_record(["subreddit", "score_threshold", "positive_ratio"])?;
        for (subreddit, judgements) in &by_subreddit {
            let curve = cumulative_positive_ratio(judgements);
            for (threshold, ratio) in curve.points {
                w.write_record([
                    subreddit.as_str(),
                    &threshold.to_string(),
                    &ratio.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    atomic_write(&out.join("popularity_curves.csv"), &curves_csv)?;

    let mut summary = String::from("popularity significance (positive vs negative post scores)\n");
    for row in &report.rows {
        summary.push_str(&format!(
            "{}: n={}+{} U={} cles={:.3} p={:.3e} (bonferroni {:.3e})\n",
            row.subreddit, row.n_positive, row.n_negative, row.u,
            row.effect_cles, row.p_two_tailed, row.p_bonferroni,
        ));
    }
    if !report.skipped.is_empty() {
        summary.push_str(&format!("skipped (single valence): {}\n", report.skipped.join(", ")));
    }
    atomic_write(&out.join("popularity_report.txt"), summary.as_bytes())?;
    write_manifest(
        &out,
        "analyze popularity",
        config_json(&args)?,
        json!({
            "cumulation_convention": "ratio among judgements with post score >= threshold",
            "tested_subreddits": report.rows.len(),
            "skipped_single_valence": report.skipped,
        }),
    )?;
    println!("{summary}");
    Ok(())
}

pub fn run_users(args: UsersArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let judge = LoadedJudge::load(&args.model, &args.external)?;
    let threads = load_corpus_threads(&args.corpus)?;

    let thresholds: Vec<f64> = args
        .thresholds
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad threshold {s:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    let mut judgements = Vec::new();
    let mut comment_counts: HashMap<String, u64> = HashMap::new();
    let mut per_user_subreddit: BTreeMap<(String, String), u64> = BTreeMap::new();
    for thread in &threads {
        judgements.extend(assign_user_judgements(thread, judge.judge()));
        for node in thread.nodes() {
            let author = &node.comment.author;
            if author == crate::ingest::DELETED_AUTHOR {
                continue;
            }
            *comment_counts.entry(author.clone()).or_default() += 1;
            *per_user_subreddit
                .entry((author.clone(), thread.post.subreddit.clone()))
                .or_default() += 1;
        }
    }
    let outcome = tally_users(&judgements, args.min_judged, args.null_rate, &comment_counts)?;

    let tallies_csv = csv_bytes(|w| {
        w.write_record(["user", "n_pos", "n_neg", "negativity_p", "n_comments_authored"])?;
        for t in &outcome.tallies {
            w.write_record([
                t.user.as_str(),
                &t.n_pos.to_string(),
                &t.n_neg.to_string(),
                &t.negativity_p.to_string(),
                &t.n_comments_authored.to_string(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("user_tallies.csv"), &tallies_csv)?;

    // Inequality of negative judgements across users.
    let negatives: Vec<f64> = outcome.tallies.iter().map(|t| t.n_neg as f64).collect();
    let lorenz = lorenz_gini(&negatives)?;
    let lorenz_csv = csv_bytes(|w| {
        w.write_record(["population_share", "negative_share"])?;
        for (x, y) in &lorenz.points {
            w.write_record([&x.to_string(), &y.to_string()])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("lorenz.csv"), &lorenz_csv)?;

    let per_sub: Vec<(String, String, u64)> = per_user_subreddit
        .iter()
        .map(|((user, subreddit), count)| (user.clone(), subreddit.clone(), *count))
        .collect();
    let curves = negativity_comment_fraction(&outcome.tallies, &per_sub, &thresholds);
    let curves_csv = csv_bytes(|w| {
        w.write_record(["subreddit", "negativity_threshold", "comment_fraction"])?;
        for (subreddit, curve) in &curves {
            for (threshold, ratio) in &curve.points {
                w.write_record([
                    subreddit.as_str(),
                    &threshold.to_string(),
                    &ratio.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    atomic_write(&out.join("negativity_curves.csv"), &curves_csv)?;

    let significant = outcome
        .tallies
        .iter()
        .filter(|t| t.negativity_p < 0.05)
        .count();
    let report = format!(
        "user judgement analysis\n\
         judgement pairs: {}\n\
         tallied users (>= {} judgements): {}\n\
         null negative rate: {}\n\
         significantly negative users (p < 0.05): {}\n\
         gini over negative-judgement counts: {:.6}\n",
        judgements.len(),
        args.min_judged,
        outcome.tallies.len(),
        outcome.null_rate,
        significant,
        lorenz.gini,
    );
    atomic_write(&out.join("users_report.txt"), report.as_bytes())?;
    write_manifest(
        &out,
        "analyze users",
        config_json(&args)?,
        json!({
            "judge": judge.describe(),
            "null_rate": outcome.null_rate,
            "min_judged": args.min_judged,
            "thresholds": thresholds,
            "gini": lorenz.gini,
            "tallied_users": outcome.tallies.len(),
        }),
    )?;
    println!("{report}");
    Ok(())
}

pub fn run_demographics(args: DemographicsArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let judge = LoadedJudge::load(&args.model, &args.external)?;
    let threads = load_corpus_threads(&args.corpus)?;
    let attribution: Attribution = args.attribution.into();
    let (records, drops) = build_demo_dataset(&threads, judge.judge(), attribution);

    let dataset_csv = csv_bytes(|w| {
        w.write_record(["post_id", "gender", "age", "valence"])?;
        for r in &records {
            w.write_record([
                r.post_id.as_str(),
                if r.gender_code == 1 { "M" } else { "F" },
                &r.age.to_string(),
                r.valence.as_str(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("demo_dataset.csv"), &dataset_csv)?;

    let table = demo_contingency(&records);
    let chi2 = chi_square_phi(table)?;
    let regression = demo_regression(&records, LogRegConfig::default())?;

    let regression_csv = csv_bytes(|w| {
        w.write_record([
            "variable", "coefficient", "standard_error", "ci_low", "ci_high", "odds_percent",
        ])?;
        for (i, name) in ["(constant)", "gender", "age"].iter().enumerate() {
            w.write_record([
                name.to_string(),
                regression.coefficients[i].to_string(),
                regression.standard_errors[i].to_string(),
                regression.confidence_intervals[i].0.to_string(),
                regression.confidence_intervals[i].1.to_string(),
                regression.odds_percent[i].to_string(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("demo_regression.csv"), &regression_csv)?;

    let report = format!(
        "demographics analysis (attribution: {})\n\
         records: {} (dropped: no-tag {}, under-18 {}, unjudged {})\n\n\
         contingency (rows male/female, columns positive/negative)\n\
         male    {:>8} {:>8}\n\
         female  {:>8} {:>8}\n\
         chi2({}) = {:.1}, p = {:.3e}, phi = {:.4}\n\n\
         logistic regression (response = negative judgement)\n\
         constant {:+.4} (se {:.4}), odds {:+.1}%\n\
         gender   {:+.4} (se {:.4}), odds {:+.1}%\n\
         age      {:+.4} (se {:.4}), odds {:+.2}%/yr\n\
         converged: {} in {} iterations\n",
        attribution.as_str(),
        records.len(),
        drops.no_tag,
        drops.underage,
        drops.unjudged,
        table[0][0], table[0][1],
        table[1][0], table[1][1],
        chi2.dof, chi2.chi2, chi2.p, chi2.phi,
        regression.coefficients[0], regression.standard_errors[0], regression.odds_percent[0],
        regression.coefficients[1], regression.standard_errors[1], regression.odds_percent[1],
        regression.coefficients[2], regression.standard_errors[2], regression.odds_percent[2],
        regression.converged, regression.iterations,
    );
    atomic_write(&out.join("demo_report.txt"), report.as_bytes())?;
    write_manifest(
        &out,
        "analyze demographics",
        config_json(&args)?,
        json!({
            "judge": judge.describe(),
            "attribution_policy": attribution.as_str(),
            "records": records.len(),
            "drops": drops,
            "chi2": chi2.chi2,
            "phi": chi2.phi,
            "coefficients": regression.coefficients,
        }),
    )?;
    println!("{report}");
    Ok(())
}

pub fn run_awry(args: AwryArgs) -> Result<(), CliError> {
    let out = resolve_out(&args.out)?;
    let model = NbModel::load(BufReader::new(fs::File::open(&args.model)?))?;
    let conversations = load_conversations(BufReader::new(fs::File::open(&args.conversations)?))?;

    let mut predictions = Vec::new();
    let mut skipped = 0u64;
    for conv in &conversations {
        match args.mode {
            AwryMode::Offline => match predict_offline(conv, &model) {
                Some(p) => predictions.push(p),
                None => skipped += 1,
            },
            AwryMode::Online => predictions.push(predict_online(conv, &model)),
        }
    }
    let truths: BTreeMap<String, bool> = conversations
        .iter()
        .map(|c| (c.id.clone(), c.derails))
        .collect();
    let metrics = evaluate_awry(&predictions, &truths)?;

    let mode = match args.mode {
        AwryMode::Offline => "offline",
        AwryMode::Online => "online",
    };
    let metrics_csv = csv_bytes(|w| {
        w.write_record(["model", "mode", "a", "p", "r", "fpr", "f1"])?;
        w.write_record([
            "nb".to_string(),
            mode.to_string(),
            metrics.accuracy.to_string(),
            metrics.precision.to_string(),
            metrics.recall.to_string(),
            metrics.fpr.to_string(),
            metrics.f1.to_string(),
        ])?;
        Ok(())
    })?;
    atomic_write(&out.join("awry_metrics.csv"), &metrics_csv)?;

    let predictions_csv = csv_bytes(|w| {
        w.write_record(["conversation_id", "predicted_derail", "trigger_index", "derails"])?;
        for p in &predictions {
            w.write_record([
                p.id.as_str(),
                &p.predicted_derail.to_string(),
                &p.trigger_index.map(|i| i.to_string()).unwrap_or_default(),
                &truths[&p.id].to_string(),
            ])?;
        }
        Ok(())
    })?;
    atomic_write(&out.join("awry_predictions.csv"), &predictions_csv)?;
    write_manifest(
        &out,
        "awry",
        config_json(&args)?,
        json!({
            "mode": mode,
            "online_stream_starts_at_utterance": 2,
            "conversations": conversations.len(),
            "skipped_too_short": skipped,
        }),
    )?;
    println!(
        "awry {mode}: a={:.1} p={:.1} r={:.1} fpr={:.1} f1={:.1} ({} conversations, {} skipped)",
        metrics.accuracy, metrics.precision, metrics.recall, metrics.fpr, metrics.f1,
        conversations.len(), skipped,
    );
    Ok(())
}
