#pragma once

#include "anchorlab/numkern.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace anchorlab {

enum class AnchorKind { Continuous, Categorical };

/// How one raw anchor column maps onto columns of A.
struct AnchorEncoding {
    std::string name;
    AnchorKind kind = AnchorKind::Continuous;
    /// Sorted level labels (categorical only); column j of the block is level j.
    std::vector<std::string> levels;
    /// First column of this anchor's block inside A.
    Index offset = 0;
    Index width() const { return kind == AnchorKind::Categorical ? static_cast<Index>(levels.size()) : 1; }
};

/// One level of the (joint) discrete anchor together with its rows.
struct AnchorLevel {
    std::string label;
    std::vector<Index> rows;
};

/// Observations X (n x d), Y (n), anchors A (n x q).
///
/// When the anchors are discrete, `level_labels` / `level_of_row` record which
/// level each row belongs to; those index sets partition the rows. `center`
/// stores the subtracted means so predictions on new data can reuse them.
struct AnchorDataset {
    MatrixXd X;
    VectorXd Y;
    MatrixXd A;

    std::string response_name = "y";
    std::vector<std::string> predictor_names;
    std::vector<AnchorEncoding> encodings;

    std::vector<std::string> level_labels;
    std::vector<Index> level_of_row;

    bool centered = false;
    VectorXd x_means;
    double y_mean = 0.0;
    VectorXd a_means;

    Index n() const { return X.rows(); }
    Index d() const { return X.cols(); }
    Index q() const { return A.cols(); }
    bool has_levels() const { return !level_labels.empty(); }

    /// Row sets per level, in label order; throws InvalidConfig without levels.
    std::vector<AnchorLevel> levels() const;

    /// Checks block sizes, finiteness and the level partition.
    void validate() const;
};

/// Builds a dataset from raw blocks, naming columns x1.., a1.. and checking sizes.
AnchorDataset make_dataset(MatrixXd X, VectorXd Y, MatrixXd A);

/// Attaches a level partition (labels per row) to a dataset.
void set_levels(AnchorDataset& ds, const std::vector<std::string>& row_labels);

/// Full dummy encoding, one indicator column per distinct label, sorted by label.
std::pair<MatrixXd, AnchorEncoding> encode_anchors(const std::vector<std::string>& labels);

/// Subtracts column means of X, Y and A. Idempotent; the first call's means
/// are kept so that prediction-time centring matches training.
AnchorDataset center(const AnchorDataset& ds);

/// Rows `rows` of ds on the original (uncentred) scale, with levels retained.
AnchorDataset subset_rows(const AnchorDataset& ds, const std::vector<Index>& rows);

/// Column roles for CSV ingestion.
struct AnchorColumn {
    std::string name;
    AnchorKind kind = AnchorKind::Categorical;
};

struct DataConfig {
    std::string response;
    std::vector<AnchorColumn> anchors;
    std::vector<std::string> drop_columns;
    /// Optional label column that defines discrete anchor levels without
    /// entering A. Without it, levels come from the categorical anchors.
    std::string level_column;
};

/// Parses the JSON form:
/// {"response": "y", "anchors": [{"name": "env", "kind": "categorical"}],
///  "drop_columns": ["h1"], "level_column": "level"}
DataConfig parse_data_config(const std::string& json_text);
DataConfig read_data_config(const std::string& path);
std::string data_config_to_json(const DataConfig& config);

/// Reads a header-first CSV; non-role numeric columns become predictors in file order.
AnchorDataset read_csv(const std::string& path, const DataConfig& config);

/// Writes response, predictors and raw anchor columns (labels for categorical
/// anchors) on the original scale. 17 significant digits round-trip exactly.
void write_csv(const std::string& path, const AnchorDataset& ds, int significant_digits = 17);

/// The DataConfig that read_csv needs to load a file written by write_csv.
DataConfig config_for(const AnchorDataset& ds);

/// printf-style "%.<digits>g" with the C locale.
std::string format_number(double value, int significant_digits = 12);

}  // namespace anchorlab
