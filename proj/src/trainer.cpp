#include "dcfa/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dcfa {

namespace {
constexpr const char* kCheckpointMagic = "dcfa-checkpoint v1";
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

Trainer::Trainer(const Dataset& ds, const SplitPlan& plan, const TrainConfig& cfg)
    : ds_(ds), plan_(plan), cfg_(cfg), eng_(cfg.seed),
      knnDrug_(buildKnnGraph(ds.drugSim, cfg.knn)),
      knnMicrobe_(buildKnnGraph(ds.microbeSim, cfg.knn)),
      hetero_(buildHeteroGraph(ds, plan, cfg.sampleSize, cfg.seed + 1)),
      model_(ds.drugCount, ds.microbeCount, cfg, eng_) {
    trainPairs_ = plan_.trainPositives;
    trainPairs_.insert(trainPairs_.end(), plan_.trainNegatives.begin(), plan_.trainNegatives.end());
    trainLabels_.assign(plan_.trainPositives.size(), 1.0);
    trainLabels_.resize(trainPairs_.size(), 0.0);
    if (plan_.trainPositives.empty()) throw DataError("no training positives in split plan");
    wPos_ = cfg.positiveWeight > 0.0
                ? cfg.positiveWeight
                : static_cast<double>(plan_.trainNegatives.size()) /
                      static_cast<double>(plan_.trainPositives.size());
}

EpochLosses Trainer::trainEpoch() {
    GradientTape tape;
    DcfaModel::LossVars loss = model_.buildLoss(tape, ds_, knnDrug_, knnMicrobe_, hetero_,
                                                trainPairs_, trainLabels_, wPos_, true, true, eng_);
    EpochLosses out;
    out.rel = tape.value(loss.rel)(0, 0);
    out.advDrug = tape.value(loss.advDrug)(0, 0);
    out.advMicrobe = tape.value(loss.advMicrobe)(0, 0);
    out.total = tape.value(loss.total)(0, 0);
    if (!std::isfinite(out.total)) {
        for (const Param& p : model_.params().all())
            if (!p.value.allFinite())
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch_ + 1) +
                                   "; first non-finite tensor: " + p.name);
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch_ + 1) +
                           "; first non-finite tensor: logits");
    }
    tape.backward(loss.total);

    ++adamT_;
    const double corr1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adamT_));
    const double corr2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adamT_));
    for (Param& p : model_.params().all()) {
        if (!tape.hasGrad(p.var)) continue;
        const DenseMatrix& g = tape.grad(p.var);
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (size_t i = 0; i < p.value.size(); ++i)
                p.value.data()[i] -= cfg_.learningRate * g.data()[i];
            continue;
        }
        for (size_t i = 0; i < p.value.size(); ++i) {
            double& m = p.adamM.data()[i];
            double& v = p.adamV.data()[i];
            const double gi = g.data()[i];
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * gi;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * gi * gi;
            p.value.data()[i] -=
                cfg_.learningRate * (m / corr1) / (std::sqrt(v / corr2) + kAdamEps);
        }
    }
    ++epoch_;
    return out;
}

std::vector<EpochLosses> Trainer::fit(std::ostream* log) {
    std::vector<EpochLosses> history;
    while (epoch_ < cfg_.epochs) {
        EpochLosses l = trainEpoch();
        if (log) {
            const auto prec = log->precision(17);
            (*log) << epoch_ << '\t' << l.rel << '\t' << l.advDrug << '\t' << l.advMicrobe << '\t'
                   << l.total << '\n';
            log->precision(prec);
        }
        history.push_back(l);
    }
    return history;
}

std::vector<double> Trainer::scorePairs(const std::vector<Pair>& pairs) {
    GradientTape tape;
    std::mt19937_64 scratch(0);  // evaluation mode draws no dropout masks
    DcfaModel::ViewVars views =
        model_.buildViews(tape, ds_, knnDrug_, knnMicrobe_, hetero_, false, false, scratch);
    Var logits = model_.scorePairs(tape, views, pairs);
    const DenseMatrix& z = tape.value(logits);
    std::vector<double> probs(pairs.size());
    for (size_t i = 0; i < probs.size(); ++i) {
        const double zi = z(static_cast<int>(i), 0);
        probs[i] = zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
    }
    return probs;
}

namespace {

void writeMatrixBits(std::ostream& out, const DenseMatrix& m) {
    out << std::hex;
    for (size_t i = 0; i < m.size(); ++i)
        out << ' ' << std::bit_cast<uint64_t>(m.data()[i]);
    out << std::dec << '\n';
}

void readMatrixBits(std::istream& in, DenseMatrix& m) {
    in >> std::hex;
    for (size_t i = 0; i < m.size(); ++i) {
        uint64_t bits = 0;
        if (!(in >> bits)) throw DataError("checkpoint: truncated tensor data");
        m.data()[i] = std::bit_cast<double>(bits);
    }
    in >> std::dec;
}

}  // namespace

void Trainer::saveCheckpoint(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << kCheckpointMagic << '\n';
    for (const auto& [k, v] : cfg_.toEntries()) out << "config." << k << '=' << v << '\n';
    out << "epoch " << epoch_ << '\n';
    out << "adam_t " << adamT_ << '\n';
    out << "rng " << eng_ << '\n';
    out << "samples " << hetero_.sampleSets.size() << '\n';
    for (const auto& smp : hetero_.sampleSets) {
        out << smp.size();
        for (int s : smp) out << ' ' << s;
        out << '\n';
    }
    out << "params " << model_.params().all().size() << '\n';
    for (const Param& p : model_.params().all()) {
        out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        writeMatrixBits(out, p.value);
        writeMatrixBits(out, p.adamM);
        writeMatrixBits(out, p.adamV);
    }
}

TrainConfig Trainer::checkpointConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw DataError("not a checkpoint file (bad magic): " + path);
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        if (line.rfind("config.", 0) != 0) break;
        const size_t eq = line.find('=');
        kv[line.substr(7, eq - 7)] = line.substr(eq + 1);
    }
    return TrainConfig::fromEntries(kv);
}

void Trainer::loadCheckpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw DataError("not a checkpoint file (bad magic): " + path);
    // config lines were already applied at construction via checkpointConfig
    do {
        if (!std::getline(in, line)) throw DataError("checkpoint: truncated header");
    } while (line.rfind("config.", 0) == 0);
    std::string tag;
    {
        std::istringstream ss(line);
        ss >> tag >> epoch_;
        if (tag != "epoch") throw DataError("checkpoint: expected epoch line, got: " + line);
    }
    in >> tag >> adamT_;
    if (tag != "adam_t") throw DataError("checkpoint: expected adam_t");
    in >> tag;
    if (tag != "rng") throw DataError("checkpoint: expected rng");
    in >> eng_;
    size_t nNodes = 0;
    in >> tag >> nNodes;
    if (tag != "samples") throw DataError("checkpoint: expected samples");
    if (nNodes != hetero_.sampleSets.size())
        throw DataError("checkpoint node count does not match the dataset");
    for (auto& smp : hetero_.sampleSets) {
        size_t sz = 0;
        in >> sz;
        smp.resize(sz);
        for (size_t i = 0; i < sz; ++i) in >> smp[i];
    }
    size_t nParams = 0;
    in >> tag >> nParams;
    if (tag != "params") throw DataError("checkpoint: expected params");
    if (nParams != model_.params().all().size())
        throw DataError("checkpoint parameter count does not match the model");
    for (size_t i = 0; i < nParams; ++i) {
        std::string name;
        int rows = 0, cols = 0;
        in >> name >> rows >> cols;
        Param& p = model_.params().at(name);
        if (p.value.rows() != rows || p.value.cols() != cols)
            throw DataError("checkpoint shape mismatch for " + name);
        readMatrixBits(in, p.value);
        readMatrixBits(in, p.adamM);
        readMatrixBits(in, p.adamV);
    }
    if (!in) throw DataError("checkpoint: truncated file");
}

}  // namespace dcfa
