#include "dcfa/config.hpp"

#include <fstream>
#include <sstream>

namespace dcfa {

FusionMode parseFusionMode(const std::string& s) {
    if (s == "bsam") return FusionMode::Bsam;
    if (s == "add") return FusionMode::Add;
    if (s == "multiply") return FusionMode::Multiply;
    if (s == "concatDim" || s == "concatReduce") return FusionMode::ConcatReduce;
    if (s == "cross" || s == "crossAttention") return FusionMode::CrossAttention;
    throw ConfigError("unknown fusion mode: " + s);
}

std::string fusionModeName(FusionMode m) {
    switch (m) {
        case FusionMode::Bsam: return "bsam";
        case FusionMode::Add: return "add";
        case FusionMode::Multiply: return "multiply";
        case FusionMode::ConcatReduce: return "concatDim";
        default: return "cross";
    }
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learningRate < 0.0) throw ConfigError("learning rate must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    if (beta1 < 0.0 || beta2 < 0.0) throw ConfigError("beta weights must be >= 0");
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (dim < 1 || heads < 1 || blocks < 1 || sampleSize < 1 || knn < 0)
        throw ConfigError("dim, heads, blocks, sampleSize must be >= 1 and knn >= 0");
    if (dim % heads != 0) throw ConfigError("dim must be divisible by heads");
    if (testFraction <= 0.0 || testFraction >= 1.0)
        throw ConfigError("test fraction must be in (0,1)");
}

std::map<std::string, std::string> TrainConfig::toEntries() const {
    std::map<std::string, std::string> kv;
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    kv["epochs"] = std::to_string(epochs);
    kv["lr"] = num(learningRate);
    kv["dropout"] = num(dropout);
    kv["beta1"] = num(beta1);
    kv["beta2"] = num(beta2);
    kv["gamma"] = num(gamma);
    kv["knn"] = std::to_string(knn);
    kv["dim"] = std::to_string(dim);
    kv["heads"] = std::to_string(heads);
    kv["blocks"] = std::to_string(blocks);
    kv["sample_size"] = std::to_string(sampleSize);
    kv["seed"] = std::to_string(seed);
    kv["optimizer"] = optimizer == OptimizerKind::Adam ? "adam" : "sgd";
    kv["test_fraction"] = num(testFraction);
    kv["positive_weight"] = num(positiveWeight);
    kv["sum_reduction"] = sumReduction ? "1" : "0";
    kv["no_residual"] = noResidual ? "1" : "0";
    kv["soft_bias"] = softBias ? "1" : "0";
    kv["test_negatives"] = balancedTestNegatives ? "balanced" : "all";
    kv["fusion"] = fusionModeName(fusion);
    kv["no_trans"] = noTrans ? "1" : "0";
    kv["no_gnn"] = noGnn ? "1" : "0";
    kv["attention_swap"] = attentionSwap ? "1" : "0";
    kv["gcn_swap"] = gcnSwap ? "1" : "0";
    kv["no_adv_drug"] = noAdvDrug ? "1" : "0";
    kv["no_adv_microbe"] = noAdvMicrobe ? "1" : "0";
    kv["adv_close"] = advClose ? "1" : "0";
    return kv;
}

TrainConfig TrainConfig::fromEntries(const std::map<std::string, std::string>& entries) {
    TrainConfig cfg;
    auto get = [&](const std::string& key) -> const std::string* {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };
    try {
        if (auto* v = get("epochs")) cfg.epochs = std::stoi(*v);
        if (auto* v = get("lr")) cfg.learningRate = std::stod(*v);
        if (auto* v = get("dropout")) cfg.dropout = std::stod(*v);
        if (auto* v = get("beta1")) cfg.beta1 = std::stod(*v);
        if (auto* v = get("beta2")) cfg.beta2 = std::stod(*v);
        if (auto* v = get("gamma")) cfg.gamma = std::stod(*v);
        if (auto* v = get("knn")) cfg.knn = std::stoi(*v);
        if (auto* v = get("dim")) cfg.dim = std::stoi(*v);
        if (auto* v = get("heads")) cfg.heads = std::stoi(*v);
        if (auto* v = get("blocks")) cfg.blocks = std::stoi(*v);
        if (auto* v = get("sample_size")) cfg.sampleSize = std::stoi(*v);
        if (auto* v = get("seed")) cfg.seed = std::stoull(*v);
        if (auto* v = get("optimizer")) {
            if (*v == "adam") cfg.optimizer = OptimizerKind::Adam;
            else if (*v == "sgd") cfg.optimizer = OptimizerKind::Sgd;
            else throw ConfigError("unknown optimizer: " + *v);
        }
        if (auto* v = get("test_fraction")) cfg.testFraction = std::stod(*v);
        if (auto* v = get("positive_weight")) cfg.positiveWeight = std::stod(*v);
        if (auto* v = get("sum_reduction")) cfg.sumReduction = *v == "1";
        if (auto* v = get("no_residual")) cfg.noResidual = *v == "1";
        if (auto* v = get("soft_bias")) cfg.softBias = *v == "1";
        if (auto* v = get("test_negatives")) {
            if (*v == "balanced") cfg.balancedTestNegatives = true;
            else if (*v == "all") cfg.balancedTestNegatives = false;
            else throw ConfigError("test_negatives must be balanced or all");
        }
        if (auto* v = get("fusion")) cfg.fusion = parseFusionMode(*v);
        if (auto* v = get("no_trans")) cfg.noTrans = *v == "1";
        if (auto* v = get("no_gnn")) cfg.noGnn = *v == "1";
        if (auto* v = get("attention_swap")) cfg.attentionSwap = *v == "1";
        if (auto* v = get("gcn_swap")) cfg.gcnSwap = *v == "1";
        if (auto* v = get("no_adv_drug")) cfg.noAdvDrug = *v == "1";
        if (auto* v = get("no_adv_microbe")) cfg.noAdvMicrobe = *v == "1";
        if (auto* v = get("adv_close")) cfg.advClose = *v == "1";
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

void applyScenario(TrainConfig& cfg, const std::string& scenario) {
    if (scenario == "full") return;
    if (scenario == "-Trans") cfg.noTrans = true;
    else if (scenario == "-GNN") cfg.noGnn = true;
    else if (scenario == "Attention") cfg.attentionSwap = true;
    else if (scenario == "GCN") cfg.gcnSwap = true;
    else if (scenario == "-drug") cfg.noAdvDrug = true;
    else if (scenario == "-micro") cfg.noAdvMicrobe = true;
    else if (scenario == "-drug microbe") { cfg.noAdvDrug = cfg.noAdvMicrobe = true; }
    else if (scenario == "close") cfg.advClose = true;
    else if (scenario.rfind("fusion:", 0) == 0) cfg.fusion = parseFusionMode(scenario.substr(7));
    else throw ConfigError("unknown ablation scenario: " + scenario);
}

std::map<std::string, std::string> readKeyValueFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        };
        trim(key);
        trim(val);
        kv[key] = val;
    }
    return kv;
}

void writeKeyValueFile(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

}  // namespace dcfa
