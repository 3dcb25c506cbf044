// Command-line front end: train / evaluate / coldstart / ablate / rank /
// gradcheck / synth. Exit codes: 0 success, 1 config error, 2 data error,
// 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dcfa/evaluation.hpp"
#include "dcfa/gradcheck.hpp"
#include "dcfa/manifest.hpp"
#include "dcfa/synth.hpp"

namespace fs = std::filesystem;
using namespace dcfa;

namespace {

struct CliState {
    std::string assocPath, drugSimPath, microbeSimPath, configPath, outDir = "out";
    TrainConfig cfg;
    // override tracking: CLI flags beat config-file values
    std::map<std::string, std::string> flagOverrides;
};

std::vector<double> parseDoubleList(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> parseStringList(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

TrainConfig resolveConfig(const CliState& st) {
    std::map<std::string, std::string> kv;
    if (!st.configPath.empty()) kv = readKeyValueFile(st.configPath);
    for (const auto& [k, v] : st.flagOverrides) kv[k] = v;
    TrainConfig cfg = TrainConfig::fromEntries(kv);
    cfg.validate();
    return cfg;
}

Dataset loadData(const CliState& st) {
    if (st.assocPath.empty()) throw ConfigError("--data-assoc is required");
    return loadDataset(st.assocPath, st.drugSimPath, st.microbeSimPath);
}

void addConfigEntries(RunManifest& m, const TrainConfig& cfg) {
    m.add("version", kVersion);
    m.add("host", hostDescription());
    for (const auto& [k, v] : cfg.toEntries()) m.add("config." + k, v);
}

void addDataDigests(RunManifest& m, const CliState& st) {
    m.addFileDigest("digest.assoc", st.assocPath);
    if (!st.drugSimPath.empty()) m.addFileDigest("digest.drug_sim", st.drugSimPath);
    if (!st.microbeSimPath.empty()) m.addFileDigest("digest.microbe_sim", st.microbeSimPath);
}

void writeMetrics(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics: " + path);
    for (const auto& [k, v] : report.entries()) out << k << '=' << v << '\n';
}

/// Pre-flight gradient check on a desk-size instance with the run's
/// structural flags but small dimensions.
GradCheckReport preflightGradCheck(const TrainConfig& runCfg, uint64_t seed) {
    SynthSpec spec;
    spec.nDrugs = 6;
    spec.nMicrobes = 4;
    spec.communities = 2;
    spec.seed = seed;
    Dataset ds = generateSynthetic(spec);
    TrainConfig cfg = runCfg;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.blocks = std::min(cfg.blocks, 2);
    cfg.sampleSize = 3;
    cfg.knn = 2;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    cfg.epochs = 1;
    SplitPlan plan = warmSplit(ds, 0.2, seed);
    std::mt19937_64 eng(seed);
    KnnGraph kd = buildKnnGraph(ds.drugSim, cfg.knn);
    KnnGraph km = buildKnnGraph(ds.microbeSim, cfg.knn);
    HeteroGraph hg = buildHeteroGraph(ds, plan, cfg.sampleSize, seed);
    DcfaModel model(ds.drugCount, ds.microbeCount, cfg, eng);
    std::vector<Pair> pairs = plan.trainPositives;
    pairs.insert(pairs.end(), plan.trainNegatives.begin(), plan.trainNegatives.end());
    std::vector<double> labels(plan.trainPositives.size(), 1.0);
    labels.resize(pairs.size(), 0.0);
    const double wPos = static_cast<double>(plan.trainNegatives.size()) /
                        static_cast<double>(plan.trainPositives.size());
    LossFn lossFn = [&](std::vector<DenseMatrix>* grads) {
        GradientTape tape;
        std::mt19937_64 scratch(0);
        auto loss = model.buildLoss(tape, ds, kd, km, hg, pairs, labels, wPos, false, false,
                                    scratch);
        const double value = tape.value(loss.total)(0, 0);
        if (grads) {
            tape.backward(loss.total);
            grads->clear();
            for (const Param& p : model.params().all())
                grads->push_back(tape.hasGrad(p.var) ? tape.grad(p.var)
                                                     : DenseMatrix(p.value.rows(), p.value.cols()));
        }
        return value;
    };
    return gradCheck(model.params(), lossFn, 1e-5, 20, seed);
}

int cmdTrain(const CliState& st, bool runGradcheck) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = resolveConfig(st);
    Dataset ds = loadData(st);
    if (runGradcheck) {
        GradCheckReport rep = preflightGradCheck(cfg, cfg.seed);
        std::cout << "gradcheck: " << rep.summary() << '\n';
        if (!rep.pass) throw NumericError("pre-flight gradient check failed: " + rep.summary());
    }
    SplitPlan plan = warmSplit(ds, cfg.testFraction, cfg.seed);
    applyGaussianFallback(ds, plan);
    fs::create_directories(st.outDir);
    writeSplitPlan(st.outDir + "/split.tsv", plan);
    Trainer trainer(ds, plan, cfg);
    std::ofstream log(st.outDir + "/train_log.tsv");
    log.precision(17);
    trainer.fit(&log);
    log.close();
    trainer.saveCheckpoint(st.outDir + "/checkpoint.txt");
    MetricValues metrics = evaluateTrainer(trainer, ds, cfg.balancedTestNegatives);
    MetricsReport report = aggregateMetrics({metrics});
    writeMetrics(st.outDir + "/metrics.txt", report);
    std::cout << report.table();

    RunManifest m;
    m.add("command", "train");
    addConfigEntries(m, cfg);
    addDataDigests(m, st);
    m.add("negative_protocol", cfg.balancedTestNegatives ? "balanced" : "all");
    m.add("positive_weight_used", std::to_string(trainer.positiveWeight()));
    m.addFileDigest("digest.checkpoint", st.outDir + "/checkpoint.txt");
    m.addFileDigest("digest.split", st.outDir + "/split.tsv");
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.add("wall_clock_seconds", std::to_string(wall));
    m.write(st.outDir + "/manifest.txt");
    return 0;
}

int cmdEvaluate(const CliState& st, const std::string& checkpointPath,
                const std::string& splitPath) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = Trainer::checkpointConfig(checkpointPath);
    for (const auto& [k, v] : st.flagOverrides) {
        if (k == "test_negatives") cfg.balancedTestNegatives = v == "balanced";
    }
    Dataset ds = loadData(st);
    SplitPlan plan = readSplitPlan(splitPath);
    applyGaussianFallback(ds, plan);
    Trainer trainer(ds, plan, cfg);
    trainer.loadCheckpoint(checkpointPath);
    MetricsReport report = aggregateMetrics({evaluateTrainer(trainer, ds, cfg.balancedTestNegatives)});
    fs::create_directories(st.outDir);
    writeMetrics(st.outDir + "/metrics.txt", report);
    std::cout << report.table();
    RunManifest m;
    m.add("command", "evaluate");
    addConfigEntries(m, cfg);
    addDataDigests(m, st);
    m.addFileDigest("digest.checkpoint", checkpointPath);
    m.addFileDigest("digest.split", splitPath);
    m.add("negative_protocol", cfg.balancedTestNegatives ? "balanced" : "all");
    m.add("wall_clock_seconds",
          std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count()));
    m.write(st.outDir + "/manifest.txt");
    return 0;
}

int cmdColdstart(const CliState& st, const std::string& side, const std::string& fractionsArg,
                 int seedCount) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = resolveConfig(st);
    Dataset ds = loadData(st);
    const SplitMode mode = side == "drug" ? SplitMode::ColdStartDrug
                         : side == "microbe" ? SplitMode::ColdStartMicrobe
                                             : throw ConfigError("--side must be drug or microbe");
    std::vector<double> fractions = parseDoubleList(fractionsArg);
    std::vector<uint64_t> seeds;
    for (int i = 0; i < seedCount; ++i) seeds.push_back(cfg.seed + i);
    std::vector<MetricValues> perRun;
    MetricsReport report = runColdStart(ds, cfg, mode, fractions, seeds, &perRun);
    fs::create_directories(st.outDir);
    writeMetrics(st.outDir + "/metrics.txt", report);
    std::cout << report.table();
    RunManifest m;
    m.add("command", "coldstart");
    addConfigEntries(m, cfg);
    addDataDigests(m, st);
    m.add("side", side);
    m.add("fractions", fractionsArg);
    m.add("seed_count", std::to_string(seedCount));
    m.add("runs_used", std::to_string(perRun.size()));
    m.add("wall_clock_seconds",
          std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count()));
    m.write(st.outDir + "/manifest.txt");
    return 0;
}

int cmdAblate(const CliState& st, const std::string& scenario, int seedCount) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg = resolveConfig(st);
    applyScenario(cfg, scenario);
    Dataset ds = loadData(st);
    std::vector<uint64_t> seeds;
    for (int i = 0; i < seedCount; ++i) seeds.push_back(cfg.seed + i);
    std::vector<MetricValues> perRun;
    MetricsReport report = runWarm(ds, cfg, seeds, &perRun);
    fs::create_directories(st.outDir);
    writeMetrics(st.outDir + "/metrics.txt", report);
    std::cout << "scenario: " << scenario << '\n' << report.table();
    RunManifest m;
    m.add("command", "ablate");
    addConfigEntries(m, cfg);
    addDataDigests(m, st);
    m.add("scenario", scenario);
    m.add("seed_count", std::to_string(seedCount));
    m.add("wall_clock_seconds",
          std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count()));
    m.write(st.outDir + "/manifest.txt");
    return 0;
}

int cmdRank(const CliState& st, const std::string& checkpointPath, const std::string& splitPath,
            const std::string& targetsArg, int topK, double topFraction) {
    TrainConfig cfg = Trainer::checkpointConfig(checkpointPath);
    Dataset ds = loadData(st);
    SplitPlan plan = readSplitPlan(splitPath);
    applyGaussianFallback(ds, plan);
    Trainer trainer(ds, plan, cfg);
    trainer.loadCheckpoint(checkpointPath);

    const std::vector<std::string> targets = parseStringList(targetsArg);
    if (targets.empty()) throw ConfigError("--targets must name at least one node");
    auto indexOf = [](const std::vector<std::string>& names, const std::string& n) {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return static_cast<int>(i);
        return -1;
    };
    const bool microbeTargets = indexOf(ds.microbeNames, targets[0]) >= 0;
    std::vector<int> targetIdx;
    for (const std::string& name : targets) {
        const int idx = indexOf(microbeTargets ? ds.microbeNames : ds.drugNames, name);
        if (idx < 0) throw DataError("unknown node name: " + name);
        targetIdx.push_back(idx);
    }
    const int nCand = microbeTargets ? ds.drugCount : ds.microbeCount;
    DenseMatrix scores(static_cast<int>(targetIdx.size()), nCand);
    std::vector<Pair> pairs(nCand);
    for (size_t t = 0; t < targetIdx.size(); ++t) {
        for (int c = 0; c < nCand; ++c)
            pairs[c] = microbeTargets ? Pair{c, targetIdx[t]} : Pair{targetIdx[t], c};
        const std::vector<double> probs = trainer.scorePairs(pairs);
        for (int c = 0; c < nCand; ++c) scores(static_cast<int>(t), c) = probs[c];
    }
    const std::vector<RankedCandidate> ranked = rankCandidates(scores, topK, topFraction);
    fs::create_directories(st.outDir);
    std::ofstream out(st.outDir + "/ranking.tsv");
    out << "candidate\tfrequency\tmeanScore\n";
    out.precision(17);
    for (const RankedCandidate& r : ranked)
        out << (microbeTargets ? ds.drugNames[r.candidate] : ds.microbeNames[r.candidate]) << '\t'
            << r.frequency << '\t' << r.meanScore << '\n';
    std::cout << "ranked " << ranked.size() << " candidates -> " << st.outDir << "/ranking.tsv\n";
    RunManifest m;
    m.add("command", "rank");
    addConfigEntries(m, cfg);
    addDataDigests(m, st);
    m.add("targets", targetsArg);
    m.add("top_k", std::to_string(topK));
    m.add("top_fraction", std::to_string(topFraction));
    m.addFileDigest("digest.ranking", st.outDir + "/ranking.tsv");
    m.write(st.outDir + "/manifest.txt");
    return 0;
}

int cmdGradcheck(const CliState& st, double eps, int inits) {
    TrainConfig cfg = resolveConfig(st);
    bool allPass = true;
    double worst = 0.0;
    for (int i = 0; i < inits; ++i) {
        GradCheckReport rep = preflightGradCheck(cfg, cfg.seed + i);
        std::cout << "init " << i << ": " << rep.summary() << '\n';
        if (!rep.entries.empty()) {
            const GradCheckEntry& w = rep.entries.front();
            std::cout << "  worst entry: " << w.param << '(' << w.row << ',' << w.col
                      << ") analytic=" << w.analytic << " numeric=" << w.numeric << '\n';
        }
        allPass = allPass && rep.pass;
        worst = std::max(worst, rep.maxRelError);
    }
    (void)eps;
    std::cout << (allPass ? "PASS" : "FAIL") << " overall max relative error " << worst << '\n';
    if (!allPass) throw NumericError("gradient check failed");
    return 0;
}

int cmdSynth(const SynthSpec& spec, const std::string& outDir) {
    Dataset ds = generateSynthetic(spec);
    writeSyntheticFiles(outDir, ds);
    RunManifest m;
    m.add("command", "synth");
    m.add("version", kVersion);
    m.add("host", hostDescription());
    m.add("drugs", std::to_string(spec.nDrugs));
    m.add("microbes", std::to_string(spec.nMicrobes));
    m.add("communities", std::to_string(spec.communities));
    m.add("p_in", std::to_string(spec.pIn));
    m.add("p_out", std::to_string(spec.pOut));
    m.add("sim_noise", std::to_string(spec.simNoise));
    m.add("seed", std::to_string(spec.seed));
    m.addFileDigest("digest.assoc", outDir + "/associations.tsv");
    m.addFileDigest("digest.drug_sim", outDir + "/drug_sim.tsv");
    m.addFileDigest("digest.microbe_sim", outDir + "/microbe_sim.tsv");
    m.write(outDir + "/manifest.txt");
    std::cout << "wrote synthetic dataset to " << outDir << '\n';
    return 0;
}

void addCommonFlags(CLI::App* app, CliState& st) {
    app->add_option("--data-assoc", st.assocPath, "association matrix (TSV/CSV)");
    app->add_option("--data-drug-sim", st.drugSimPath, "drug similarity matrix");
    app->add_option("--data-microbe-sim", st.microbeSimPath, "microbe similarity matrix");
    app->add_option("--config", st.configPath, "key=value config file");
    app->add_option("--out", st.outDir, "output directory");
    auto track = [&st, app](const std::string& flag, const std::string& key) {
        app->add_option_function<std::string>(
            flag, [&st, key](const std::string& v) { st.flagOverrides[key] = v; });
    };
    track("--seed", "seed");
    track("--epochs", "epochs");
    track("--lr", "lr");
    track("--dropout", "dropout");
    track("--beta1", "beta1");
    track("--beta2", "beta2");
    track("--gamma", "gamma");
    track("--knn", "knn");
    track("--dim", "dim");
    track("--heads", "heads");
    track("--blocks", "blocks");
    track("--sample-size", "sample_size");
    track("--fusion", "fusion");
    track("--test-fraction", "test_fraction");
    track("--positive-weight", "positive_weight");
    track("--optimizer", "optimizer");
    track("--test-negatives", "test_negatives");
    app->add_flag_callback("--sum-reduction",
                           [&st] { st.flagOverrides["sum_reduction"] = "1"; },
                           "summed BCE instead of mean reduction");
    app->add_flag_callback("--no-residual",
                           [&st] { st.flagOverrides["no_residual"] = "1"; },
                           "drop residual + layer norm after attention");
    app->add_flag_callback("--no-soft-bias",
                           [&st] { st.flagOverrides["soft_bias"] = "0"; },
                           "disable the sample-score attention bias");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCFA_DMP: multi-view divergence-convergence drug-microbe link prediction"};
    app.require_subcommand(1);

    CliState st;
    bool trainGradcheck = false;
    auto* train = app.add_subcommand("train", "train a model on a warm split");
    addCommonFlags(train, st);
    train->add_flag("--gradcheck", trainGradcheck, "pre-flight gradient check before training");

    std::string checkpointPath, splitPath;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a stored split");
    addCommonFlags(evaluate, st);
    evaluate->add_option("--checkpoint", checkpointPath)->required();
    evaluate->add_option("--split", splitPath)->required();

    std::string side = "microbe", fractions = "0.02,0.04";
    int seedCount = 1;
    auto* coldstart = app.add_subcommand("coldstart", "cold-start protocol over fractions x seeds");
    addCommonFlags(coldstart, st);
    coldstart->add_option("--side", side, "drug or microbe");
    coldstart->add_option("--fractions", fractions, "comma-separated node fractions");
    coldstart->add_option("--seeds", seedCount, "number of seeds (seed, seed+1, ...)");

    std::string scenario = "full";
    int ablateSeeds = 1;
    auto* ablate = app.add_subcommand("ablate", "train+evaluate one ablation scenario");
    addCommonFlags(ablate, st);
    ablate->add_option("--scenario", scenario,
                       "-Trans | -GNN | Attention | GCN | -drug | -micro | '-drug microbe' | "
                       "close | fusion:{add,multiply,concatDim,cross,bsam} | full");
    ablate->add_option("--seeds", ablateSeeds, "number of seeds");

    std::string targets;
    int topK = 20;
    double topFraction = 0.25;
    auto* rank = app.add_subcommand("rank", "rank candidates for target nodes");
    addCommonFlags(rank, st);
    rank->add_option("--checkpoint", checkpointPath)->required();
    rank->add_option("--split", splitPath)->required();
    rank->add_option("--targets", targets, "comma-separated node names")->required();
    rank->add_option("--top-k", topK, "per-target shortlist size");
    rank->add_option("--top-fraction", topFraction, "kept fraction after frequency aggregation");

    double gcEps = 1e-5;
    int gcInits = 3;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full loss");
    addCommonFlags(gradcheck, st);
    gradcheck->add_option("--eps", gcEps, "central-difference step");
    gradcheck->add_option("--inits", gcInits, "number of random initializations");

    SynthSpec spec;
    std::string synthOut = "synth_out";
    auto* synth = app.add_subcommand("synth", "generate a planted block-model dataset");
    synth->add_option("--drugs", spec.nDrugs);
    synth->add_option("--microbes", spec.nMicrobes);
    synth->add_option("--communities", spec.communities);
    synth->add_option("--p-in", spec.pIn);
    synth->add_option("--p-out", spec.pOut);
    synth->add_option("--sim-noise", spec.simNoise);
    synth->add_option("--seed", spec.seed);
    synth->add_option("--out", synthOut);

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmdTrain(st, trainGradcheck);
        if (evaluate->parsed()) return cmdEvaluate(st, checkpointPath, splitPath);
        if (coldstart->parsed()) return cmdColdstart(st, side, fractions, seedCount);
        if (ablate->parsed()) return cmdAblate(st, scenario, ablateSeeds);
        if (rank->parsed()) return cmdRank(st, checkpointPath, splitPath, targets, topK, topFraction);
        if (gradcheck->parsed()) return cmdGradcheck(st, gcEps, gcInits);
        if (synth->parsed()) return cmdSynth(spec, synthOut);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return 3;
    } catch (const DimensionError& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
