#include "anchorlab/scm.hpp"

#include "anchorlab/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace anchorlab {

namespace {

using nlohmann::json;

MatrixXd read_matrix(const json& node, Index rows, Index cols, const std::string& what) {
    MatrixXd m = MatrixXd::Zero(rows, cols);
    if (node.is_object()) {
        for (const auto& entry : node.at("entries")) {
            if (entry.size() != 3) throw InvalidConfig(what + " entries must be [row, col, value]");
            const Index i = entry[0].get<Index>();
            const Index j = entry[1].get<Index>();
            if (i < 0 || i >= rows || j < 0 || j >= cols) {
                throw DimensionMismatch(what + " entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") is out of range");
            }
            m(i, j) = entry[2].get<double>();
        }
        return m;
    }
    if (!node.is_array() || static_cast<Index>(node.size()) != rows) {
        throw DimensionMismatch(what + " must have " + std::to_string(rows) + " rows");
    }
    for (Index i = 0; i < rows; ++i) {
        const json& row = node[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw DimensionMismatch(what + " row " + std::to_string(i) + " must have " + std::to_string(cols) +
                                    " entries");
        }
        for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

json write_matrix(const MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

LinearScm parse_scm(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("SCM file is not valid JSON: ") + e.what());
    }
    try {
        const Index d = doc.at("d").get<Index>();
        const Index r = doc.value("r", Index{0});
        const Index q = doc.at("q").get<Index>();
        if (d < 1 || r < 0 || q < 1) throw InvalidConfig("SCM needs d >= 1, r >= 0, q >= 1");
        const Index p = d + 1 + r;

        MatrixXd B = read_matrix(doc.at("B"), p, p, "B");
        MatrixXd M = read_matrix(doc.at("M"), p, q, "M");

        VectorXd noise(p);
        const json& ns = doc.value("noise_scales", json(1.0));
        if (ns.is_number()) {
            noise.setConstant(ns.get<double>());
        } else {
            if (static_cast<Index>(ns.size()) != p) throw DimensionMismatch("noise_scales must have d + 1 + r entries");
            for (Index i = 0; i < p; ++i) noise(i) = ns[static_cast<std::size_t>(i)].get<double>();
        }

        const json anchor = doc.value("anchor", json::object());
        const std::string kind = anchor.value("kind", std::string("gaussian"));
        AnchorSpec spec;
        if (kind == "rademacher") {
            spec = rademacher_anchor(q);
        } else if (kind == "gaussian") {
            spec = gaussian_anchor(anchor.contains("gram") ? read_matrix(anchor.at("gram"), q, q, "anchor gram")
                                                           : MatrixXd::Identity(q, q));
        } else if (kind == "discrete") {
            const json& support = anchor.at("support");
            spec = discrete_anchor(read_matrix(support, static_cast<Index>(support.size()), q, "anchor support"));
        } else {
            throw InvalidConfig("unknown anchor kind '" + kind + "'");
        }
        return make_scm(std::move(B), std::move(M), std::move(noise), std::move(spec), d, r);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("SCM file: ") + e.what());
    }
}

LinearScm load_scm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open SCM file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scm(buf.str());
}

std::string scm_to_json(const LinearScm& scm) {
    json doc;
    doc["d"] = scm.d;
    doc["r"] = scm.r;
    doc["q"] = scm.q;
    doc["B"] = write_matrix(scm.B);
    doc["M"] = write_matrix(scm.M);
    doc["noise_scales"] = std::vector<double>(scm.noise_scales.data(), scm.noise_scales.data() + scm.noise_scales.size());
    json anchor;
    switch (scm.anchor.kind) {
        case AnchorDistribution::Rademacher:
            anchor["kind"] = "rademacher";
            break;
        case AnchorDistribution::Gaussian:
            anchor["kind"] = "gaussian";
            anchor["gram"] = write_matrix(scm.anchor.gram);
            break;
        case AnchorDistribution::Discrete:
            anchor["kind"] = "discrete";
            anchor["support"] = write_matrix(scm.anchor.support);
            break;
    }
    doc["anchor"] = anchor;
    return doc.dump(2);
}

void save_scm(const std::string& path, const LinearScm& scm) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot write '" + path + "'");
    out << scm_to_json(scm) << '\n';
}

}  // namespace anchorlab
