#include "anchorlab/datamodel.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace anchorlab {

std::vector<AnchorLevel> AnchorDataset::levels() const {
    if (!has_levels()) throw InvalidConfig("dataset has no discrete anchor levels");
    std::vector<AnchorLevel> out(level_labels.size());
    for (std::size_t k = 0; k < level_labels.size(); ++k) out[k].label = level_labels[k];
    for (Index i = 0; i < static_cast<Index>(level_of_row.size()); ++i) {
        out[static_cast<std::size_t>(level_of_row[static_cast<std::size_t>(i)])].rows.push_back(i);
    }
    return out;
}

void AnchorDataset::validate() const {
    if (Y.size() != X.rows() || A.rows() != X.rows()) {
        throw DimensionMismatch("X, Y and A must share the number of rows");
    }
    if (!X.allFinite() || !Y.allFinite() || !A.allFinite()) {
        throw DomainError("dataset contains non-finite entries");
    }
    if (!predictor_names.empty() && static_cast<Index>(predictor_names.size()) != X.cols()) {
        throw DimensionMismatch("predictor names do not match X columns");
    }
    if (has_levels()) {
        if (static_cast<Index>(level_of_row.size()) != X.rows()) {
            throw DimensionMismatch("level assignment must cover every row");
        }
        for (Index lvl : level_of_row) {
            if (lvl < 0 || lvl >= static_cast<Index>(level_labels.size())) {
                throw InvalidConfig("row assigned to an unknown anchor level");
            }
        }
    }
}

AnchorDataset make_dataset(MatrixXd X, VectorXd Y, MatrixXd A) {
    AnchorDataset ds;
    ds.X = std::move(X);
    ds.Y = std::move(Y);
    ds.A = std::move(A);
    for (Index j = 0; j < ds.d(); ++j) ds.predictor_names.push_back("x" + std::to_string(j + 1));
    for (Index j = 0; j < ds.q(); ++j) {
        AnchorEncoding enc;
        enc.name = "a" + std::to_string(j + 1);
        enc.kind = AnchorKind::Continuous;
        enc.offset = j;
        ds.encodings.push_back(enc);
    }
    ds.validate();
    return ds;
}

void set_levels(AnchorDataset& ds, const std::vector<std::string>& row_labels) {
    if (static_cast<Index>(row_labels.size()) != ds.n()) {
        throw DimensionMismatch("one level label per row is required");
    }
    std::map<std::string, Index> index;
    for (const auto& label : row_labels) index.emplace(label, 0);
    ds.level_labels.clear();
    for (auto& [label, idx] : index) {
        idx = static_cast<Index>(ds.level_labels.size());
        ds.level_labels.push_back(label);
    }
    ds.level_of_row.resize(row_labels.size());
    for (std::size_t i = 0; i < row_labels.size(); ++i) ds.level_of_row[i] = index[row_labels[i]];
}

std::pair<MatrixXd, AnchorEncoding> encode_anchors(const std::vector<std::string>& labels) {
    if (labels.empty()) throw EmptyInput("cannot encode anchors for zero rows");
    std::vector<std::string> levels = labels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    MatrixXd A = MatrixXd::Zero(static_cast<Index>(labels.size()), static_cast<Index>(levels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto it = std::lower_bound(levels.begin(), levels.end(), labels[i]);
        A(static_cast<Index>(i), static_cast<Index>(it - levels.begin())) = 1.0;
    }
    AnchorEncoding enc;
    enc.kind = AnchorKind::Categorical;
    enc.levels = std::move(levels);
    return {std::move(A), std::move(enc)};
}

AnchorDataset center(const AnchorDataset& ds) {
    if (ds.n() < 2) throw DomainError("centering needs at least two rows");
    AnchorDataset out = ds;
    const VectorXd xm = ds.X.colwise().mean();
    const double ym = ds.Y.mean();
    const VectorXd am = ds.A.colwise().mean();
    out.X.rowwise() -= xm.transpose();
    out.Y.array() -= ym;
    out.A.rowwise() -= am.transpose();
    if (ds.centered) {
        out.x_means = ds.x_means + xm;
        out.y_mean = ds.y_mean + ym;
        out.a_means = ds.a_means + am;
    } else {
        out.x_means = xm;
        out.y_mean = ym;
        out.a_means = am;
    }
    out.centered = true;
    return out;
}

AnchorDataset subset_rows(const AnchorDataset& ds, const std::vector<Index>& rows) {
    AnchorDataset out;
    const Index m = static_cast<Index>(rows.size());
    out.X.resize(m, ds.d());
    out.Y.resize(m);
    out.A.resize(m, ds.q());
    for (Index i = 0; i < m; ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        out.X.row(i) = ds.X.row(r);
        out.Y(i) = ds.Y(r);
        out.A.row(i) = ds.A.row(r);
    }
    if (ds.centered) {
        out.X.rowwise() += ds.x_means.transpose();
        out.Y.array() += ds.y_mean;
        out.A.rowwise() += ds.a_means.transpose();
    }
    out.response_name = ds.response_name;
    out.predictor_names = ds.predictor_names;
    out.encodings = ds.encodings;
    if (ds.has_levels()) {
        // keep only levels that still own rows, preserving label order
        std::vector<Index> remap(ds.level_labels.size(), -1);
        for (Index r : rows) remap[static_cast<std::size_t>(ds.level_of_row[static_cast<std::size_t>(r)])] = 0;
        for (std::size_t k = 0; k < remap.size(); ++k) {
            if (remap[k] < 0) continue;
            remap[k] = static_cast<Index>(out.level_labels.size());
            out.level_labels.push_back(ds.level_labels[k]);
        }
        out.level_of_row.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.level_of_row[i] = remap[static_cast<std::size_t>(ds.level_of_row[static_cast<std::size_t>(rows[i])])];
        }
    }
    return out;
}

}  // namespace anchorlab
