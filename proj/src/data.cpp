#include "dcfa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dcfa {

std::vector<Pair> Dataset::positives() const {
    std::vector<Pair> out;
    for (int i = 0; i < drugCount; ++i)
        for (int j = 0; j < microbeCount; ++j)
            if (associations(i, j) == 1.0) out.push_back({i, j});
    return out;
}

namespace {

std::vector<std::string> splitLine(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    return out;
}

void validateSimilarity(DenseMatrix& sim, const std::string& what) {
    if (sim.rows() != sim.cols())
        throw DataError(what + " similarity is not square: " + sim.shapeStr());
    const int n = sim.rows();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            const double d = std::abs(sim(i, j) - sim(j, i));
            if (d > 1e-6)
                throw DataError(what + " similarity asymmetric at (" + std::to_string(i) + "," +
                                std::to_string(j) + "): |delta| = " + std::to_string(d));
            const double avg = 0.5 * (sim(i, j) + sim(j, i));
            sim(i, j) = sim(j, i) = avg;
        }
    for (int i = 0; i < n; ++i) {
        if (std::abs(sim(i, i) - 1.0) > 1e-6)
            throw DataError(what + " similarity diagonal entry " + std::to_string(i) +
                            " is not 1: " + std::to_string(sim(i, i)));
        sim(i, i) = 1.0;
        for (int j = 0; j < n; ++j) {
            if (sim(i, j) < -1e-6 || sim(i, j) > 1.0 + 1e-6)
                throw DataError(what + " similarity entry out of [0,1] at (" + std::to_string(i) +
                                "," + std::to_string(j) + "): " + std::to_string(sim(i, j)));
            sim(i, j) = std::clamp(sim(i, j), 0.0, 1.0);
        }
    }
}

}  // namespace

DenseMatrix readDelimitedMatrix(const std::string& path, std::vector<std::string>& rowNames,
                                std::vector<std::string>& colNames) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> header = splitLine(line, delim);
    if (header.size() < 2) throw DataError("header with no columns in " + path);
    colNames.assign(header.begin() + 1, header.end());
    const int cols = static_cast<int>(colNames.size());
    rowNames.clear();
    std::vector<double> values;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::vector<std::string> fields = splitLine(line, delim);
        if (static_cast<int>(fields.size()) != cols + 1)
            throw DataError(path + ":" + std::to_string(lineNo) + ": expected " +
                            std::to_string(cols + 1) + " fields, got " + std::to_string(fields.size()));
        rowNames.push_back(fields[0]);
        for (int j = 1; j <= cols; ++j) {
            try {
                size_t used = 0;
                const double v = std::stod(fields[j], &used);
                if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
                values.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineNo) + ": bad numeric field '" +
                                fields[j] + "'");
            }
        }
    }
    return DenseMatrix(static_cast<int>(rowNames.size()), cols, std::move(values));
}

void writeDelimitedMatrix(const std::string& path, const DenseMatrix& m,
                          const std::vector<std::string>& rowNames,
                          const std::vector<std::string>& colNames) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "name";
    for (const auto& c : colNames) out << '\t' << c;
    out << '\n';
    out.precision(17);
    for (int i = 0; i < m.rows(); ++i) {
        out << rowNames[i];
        for (int j = 0; j < m.cols(); ++j) out << '\t' << m(i, j);
        out << '\n';
    }
}

Dataset loadDataset(const std::string& assocPath, const std::string& drugSimPath,
                    const std::string& microbeSimPath) {
    Dataset ds;
    ds.associations = readDelimitedMatrix(assocPath, ds.drugNames, ds.microbeNames);
    ds.drugCount = ds.associations.rows();
    ds.microbeCount = ds.associations.cols();
    for (int i = 0; i < ds.drugCount; ++i)
        for (int j = 0; j < ds.microbeCount; ++j) {
            const double v = ds.associations(i, j);
            if (v != 0.0 && v != 1.0)
                throw DataError("non-binary association entry at (" + std::to_string(i) + "," +
                                std::to_string(j) + "): " + std::to_string(v));
        }
    if (!drugSimPath.empty()) {
        std::vector<std::string> rn, cn;
        ds.drugSim = readDelimitedMatrix(drugSimPath, rn, cn);
        if (ds.drugSim.rows() != ds.drugCount)
            throw DataError("drug similarity shape " + ds.drugSim.shapeStr() + " does not match " +
                            std::to_string(ds.drugCount) + " drugs");
        validateSimilarity(ds.drugSim, "drug");
        ds.hasDrugSim = true;
    }
    if (!microbeSimPath.empty()) {
        std::vector<std::string> rn, cn;
        ds.microbeSim = readDelimitedMatrix(microbeSimPath, rn, cn);
        if (ds.microbeSim.rows() != ds.microbeCount)
            throw DataError("microbe similarity shape " + ds.microbeSim.shapeStr() +
                            " does not match " + std::to_string(ds.microbeCount) + " microbes");
        validateSimilarity(ds.microbeSim, "microbe");
        ds.hasMicrobeSim = true;
    }
    return ds;
}

namespace {

// All non-associated (i,j) in row-major order.
std::vector<Pair> allNegatives(const Dataset& ds) {
    std::vector<Pair> out;
    for (int i = 0; i < ds.drugCount; ++i)
        for (int j = 0; j < ds.microbeCount; ++j)
            if (ds.associations(i, j) == 0.0) out.push_back({i, j});
    return out;
}

}  // namespace

SplitPlan warmSplit(const Dataset& ds, double testFraction, uint64_t seed) {
    if (testFraction <= 0.0 || testFraction >= 1.0)
        throw ConfigError("testFraction must be in (0,1)");
    std::vector<Pair> pos = ds.positives();
    if (pos.size() < 2) throw DataError("warmSplit needs at least 2 positives");
    std::mt19937_64 eng(seed);
    rng::shuffle(pos, eng);
    const size_t nTest = static_cast<size_t>(testFraction * static_cast<double>(pos.size()));
    SplitPlan plan;
    plan.mode = SplitMode::Warm;
    plan.seed = seed;
    plan.testPositives.assign(pos.begin(), pos.begin() + nTest);
    plan.trainPositives.assign(pos.begin() + nTest, pos.end());
    std::vector<Pair> neg = allNegatives(ds);
    rng::shuffle(neg, eng);
    const size_t nTestNeg = std::min(nTest, neg.size());
    plan.testNegatives.assign(neg.begin(), neg.begin() + nTestNeg);
    plan.trainNegatives.assign(neg.begin() + nTestNeg, neg.end());
    std::sort(plan.trainNegatives.begin(), plan.trainNegatives.end());
    return plan;
}

SplitPlan coldStartSplit(const Dataset& ds, SplitMode side, double nodeFraction, uint64_t seed) {
    if (side == SplitMode::Warm) throw ConfigError("coldStartSplit requires a cold-start side");
    if (nodeFraction <= 0.0 || nodeFraction >= 1.0)
        throw ConfigError("nodeFraction must be in (0,1)");
    const bool drugSide = side == SplitMode::ColdStartDrug;
    const int nNodes = drugSide ? ds.drugCount : ds.microbeCount;
    const int nHeld = static_cast<int>(std::ceil(nodeFraction * nNodes));
    std::vector<int> order(nNodes);
    for (int i = 0; i < nNodes; ++i) order[i] = i;
    std::mt19937_64 eng(seed);
    rng::shuffle(order, eng);
    std::vector<char> held(nNodes, 0);
    SplitPlan plan;
    plan.mode = side;
    plan.seed = seed;
    plan.heldOutNodes.assign(order.begin(), order.begin() + nHeld);
    std::sort(plan.heldOutNodes.begin(), plan.heldOutNodes.end());
    for (int n : plan.heldOutNodes) held[n] = 1;

    std::vector<Pair> heldNeg;
    for (const Pair& p : ds.positives()) {
        const int node = drugSide ? p.drug : p.microbe;
        (held[node] ? plan.testPositives : plan.trainPositives).push_back(p);
    }
    if (plan.trainPositives.empty())
        throw DataError("cold-start selection covers every positive pair");
    plan.degenerate = plan.testPositives.empty();
    for (const Pair& p : allNegatives(ds)) {
        const int node = drugSide ? p.drug : p.microbe;
        if (held[node])
            heldNeg.push_back(p);
        else
            plan.trainNegatives.push_back(p);
    }
    rng::shuffle(heldNeg, eng);
    const size_t nTestNeg = std::min(plan.testPositives.size(), heldNeg.size());
    plan.testNegatives.assign(heldNeg.begin(), heldNeg.begin() + nTestNeg);
    return plan;
}

void writeSplitPlan(const std::string& path, const SplitPlan& plan) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    const char* mode = plan.mode == SplitMode::Warm ? "warm"
                       : plan.mode == SplitMode::ColdStartDrug ? "coldStartDrug"
                                                               : "coldStartMicrobe";
    out << "# mode=" << mode << " seed=" << plan.seed << " degenerate=" << (plan.degenerate ? 1 : 0)
        << '\n';
    auto dump = [&](const std::vector<Pair>& v, const char* tag) {
        for (const Pair& p : v) out << p.drug << '\t' << p.microbe << '\t' << tag << '\n';
    };
    dump(plan.trainPositives, "trainPos");
    dump(plan.trainNegatives, "trainNeg");
    dump(plan.testPositives, "testPos");
    dump(plan.testNegatives, "testNeg");
}

SplitPlan readSplitPlan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open split file: " + path);
    SplitPlan plan;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("mode=coldStartDrug") != std::string::npos)
                plan.mode = SplitMode::ColdStartDrug;
            else if (line.find("mode=coldStartMicrobe") != std::string::npos)
                plan.mode = SplitMode::ColdStartMicrobe;
            const size_t sp = line.find("seed=");
            if (sp != std::string::npos) plan.seed = std::stoull(line.substr(sp + 5));
            if (line.find("degenerate=1") != std::string::npos) plan.degenerate = true;
            continue;
        }
        std::istringstream ss(line);
        Pair p;
        std::string tag;
        if (!(ss >> p.drug >> p.microbe >> tag))
            throw DataError("bad split line: " + line);
        if (tag == "trainPos")
            plan.trainPositives.push_back(p);
        else if (tag == "trainNeg")
            plan.trainNegatives.push_back(p);
        else if (tag == "testPos")
            plan.testPositives.push_back(p);
        else if (tag == "testNeg")
            plan.testNegatives.push_back(p);
        else
            throw DataError("unknown split tag: " + tag);
    }
    // recover held-out nodes for cold-start invariant checks
    if (plan.mode != SplitMode::Warm) {
        std::vector<int> nodes;
        for (const Pair& p : plan.testPositives)
            nodes.push_back(plan.mode == SplitMode::ColdStartDrug ? p.drug : p.microbe);
        for (const Pair& p : plan.testNegatives)
            nodes.push_back(plan.mode == SplitMode::ColdStartDrug ? p.drug : p.microbe);
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        plan.heldOutNodes = std::move(nodes);
    }
    return plan;
}

DenseMatrix gaussianProfileKernel(int drugCount, int microbeCount,
                                  const std::vector<Pair>& trainPositives, bool forDrugs) {
    const int n = forDrugs ? drugCount : microbeCount;
    const int m = forDrugs ? microbeCount : drugCount;
    DenseMatrix profiles(n, m);
    for (const Pair& p : trainPositives)
        profiles(forDrugs ? p.drug : p.microbe, forDrugs ? p.microbe : p.drug) = 1.0;
    double meanSq = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += profiles(i, j) * profiles(i, j);
        meanSq += s;
    }
    meanSq /= n;
    const double bandwidth = meanSq > 0.0 ? 1.0 / meanSq : 1.0;
    DenseMatrix sim(n, n);
    for (int i = 0; i < n; ++i) {
        sim(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < m; ++k) {
                const double c = profiles(i, k) - profiles(j, k);
                d2 += c * c;
            }
            sim(i, j) = sim(j, i) = std::exp(-bandwidth * d2);
        }
    }
    return sim;
}

void applyGaussianFallback(Dataset& ds, const SplitPlan& plan) {
    if (!ds.hasDrugSim) {
        ds.drugSim = gaussianProfileKernel(ds.drugCount, ds.microbeCount, plan.trainPositives, true);
        ds.hasDrugSim = true;
    }
    if (!ds.hasMicrobeSim) {
        ds.microbeSim =
            gaussianProfileKernel(ds.drugCount, ds.microbeCount, plan.trainPositives, false);
        ds.hasMicrobeSim = true;
    }
}

}  // namespace dcfa
