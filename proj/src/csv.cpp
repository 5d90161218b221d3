#include "anchorlab/datamodel.hpp"

#include "anchorlab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace anchorlab {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    std::string out = s.substr(first, last - first + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end && std::isfinite(value);
}

AnchorKind parse_kind(const std::string& kind) {
    if (kind == "categorical" || kind == "categorical-dummy") return AnchorKind::Categorical;
    if (kind == "continuous") return AnchorKind::Continuous;
    throw InvalidConfig("unknown anchor kind '" + kind + "'");
}

}  // namespace

std::string format_number(double value, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
    return buf;
}

DataConfig parse_data_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("column-role config is not valid JSON: ") + e.what());
    }
    DataConfig config;
    try {
        config.response = doc.at("response").get<std::string>();
        if (doc.contains("anchors")) {
            for (const auto& entry : doc.at("anchors")) {
                AnchorColumn col;
                if (entry.is_string()) {
                    col.name = entry.get<std::string>();
                } else {
                    col.name = entry.at("name").get<std::string>();
                    col.kind = parse_kind(entry.value("kind", std::string("categorical")));
                }
                config.anchors.push_back(col);
            }
        }
        if (doc.contains("drop_columns")) {
            config.drop_columns = doc.at("drop_columns").get<std::vector<std::string>>();
        }
        config.level_column = doc.value("level_column", std::string());
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("column-role config: ") + e.what());
    }
    if (config.response.empty()) throw InvalidConfig("column-role config needs a response column");
    return config;
}

DataConfig read_data_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_data_config(buf.str());
}

std::string data_config_to_json(const DataConfig& config) {
    json doc;
    doc["response"] = config.response;
    doc["anchors"] = json::array();
    for (const auto& a : config.anchors) {
        doc["anchors"].push_back(
            {{"name", a.name}, {"kind", a.kind == AnchorKind::Categorical ? "categorical" : "continuous"}});
    }
    doc["drop_columns"] = config.drop_columns;
    if (!config.level_column.empty()) doc["level_column"] = config.level_column;
    return doc.dump(2);
}

AnchorDataset read_csv(const std::string& path, const DataConfig& config) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open data file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw EmptyInput("'" + path + "' has no header row");
    const std::vector<std::string> header = split_line(line);

    std::vector<std::vector<std::string>> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto row = split_line(line);
        if (row.size() != header.size()) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " + std::to_string(row.size()));
        }
        cells.push_back(std::move(row));
    }
    if (cells.empty()) throw EmptyInput("'" + path + "' has no data rows");

    auto column_index = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("column '" + name + "' not found in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    // line numbers are 1-based with the header as line 1
    auto numeric_column = [&](std::size_t col) {
        VectorXd out(static_cast<Index>(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v;
            if (!parse_double(cells[i][col], v)) {
                throw ParseError(path + " line " + std::to_string(i + 2) + ", column '" + header[col] +
                                 "': '" + cells[i][col] + "' is not a number");
            }
            out(static_cast<Index>(i)) = v;
        }
        return out;
    };

    std::set<std::size_t> reserved;
    const std::size_t response_col = column_index(config.response);
    reserved.insert(response_col);
    for (const auto& a : config.anchors) reserved.insert(column_index(a.name));
    for (const auto& name : config.drop_columns) reserved.insert(column_index(name));
    std::size_t level_col = header.size();
    if (!config.level_column.empty()) {
        level_col = column_index(config.level_column);
        reserved.insert(level_col);
    }

    AnchorDataset ds;
    ds.response_name = config.response;
    ds.Y = numeric_column(response_col);

    std::vector<std::size_t> predictor_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!reserved.count(c)) predictor_cols.push_back(c);
    }
    ds.X.resize(static_cast<Index>(cells.size()), static_cast<Index>(predictor_cols.size()));
    for (std::size_t j = 0; j < predictor_cols.size(); ++j) {
        const std::size_t col = predictor_cols[j];
        const bool any_numeric = std::any_of(cells.begin(), cells.end(), [&](const auto& row) {
            double v;
            return parse_double(row[col], v);
        });
        if (!any_numeric) {
            throw NonNumericPredictor("column '" + header[col] +
                                      "' has no numeric values; declare it as an anchor or drop it");
        }
        ds.X.col(static_cast<Index>(j)) = numeric_column(col);
        ds.predictor_names.push_back(header[col]);
    }

    std::vector<MatrixXd> blocks;
    Index offset = 0;
    std::vector<std::string> joint_labels(cells.size());
    bool any_categorical = false;
    for (const auto& a : config.anchors) {
        const std::size_t col = column_index(a.name);
        if (a.kind == AnchorKind::Categorical) {
            std::vector<std::string> labels(cells.size());
            for (std::size_t i = 0; i < cells.size(); ++i) {
                labels[i] = cells[i][col];
                joint_labels[i] += (any_categorical ? "|" : "") + labels[i];
            }
            any_categorical = true;
            auto [block, enc] = encode_anchors(labels);
            enc.name = a.name;
            enc.offset = offset;
            offset += block.cols();
            blocks.push_back(std::move(block));
            ds.encodings.push_back(std::move(enc));
        } else {
            AnchorEncoding enc;
            enc.name = a.name;
            enc.kind = AnchorKind::Continuous;
            enc.offset = offset++;
            blocks.push_back(numeric_column(col));
            ds.encodings.push_back(std::move(enc));
        }
    }
    ds.A.resize(static_cast<Index>(cells.size()), offset);
    for (const auto& enc : ds.encodings) {
        ds.A.middleCols(enc.offset, enc.width()) = blocks[static_cast<std::size_t>(&enc - ds.encodings.data())];
    }

    if (level_col < header.size()) {
        std::vector<std::string> labels(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) labels[i] = cells[i][level_col];
        set_levels(ds, labels);
    } else if (any_categorical) {
        set_levels(ds, joint_labels);
    }
    ds.validate();
    return ds;
}

void write_csv(const std::string& path, const AnchorDataset& ds, int significant_digits) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot write '" + path + "'");

    const Index n = ds.n();
    VectorXd y = ds.Y;
    MatrixXd X = ds.X;
    MatrixXd A = ds.A;
    if (ds.centered) {
        y.array() += ds.y_mean;
        X.rowwise() += ds.x_means.transpose();
        A.rowwise() += ds.a_means.transpose();
    }
    const DataConfig config = config_for(ds);

    out << ds.response_name;
    for (const auto& name : ds.predictor_names) out << ',' << name;
    for (const auto& enc : ds.encodings) out << ',' << enc.name;
    if (!config.level_column.empty()) out << ',' << config.level_column;
    out << '\n';

    for (Index i = 0; i < n; ++i) {
        out << format_number(y(i), significant_digits);
        for (Index j = 0; j < ds.d(); ++j) out << ',' << format_number(X(i, j), significant_digits);
        for (const auto& enc : ds.encodings) {
            if (enc.kind == AnchorKind::Categorical) {
                Index which;
                A.row(i).segment(enc.offset, enc.width()).maxCoeff(&which);
                out << ',' << enc.levels[static_cast<std::size_t>(which)];
            } else {
                out << ',' << format_number(A(i, enc.offset), significant_digits);
            }
        }
        if (!config.level_column.empty()) {
            out << ',' << ds.level_labels[static_cast<std::size_t>(ds.level_of_row[static_cast<std::size_t>(i)])];
        }
        out << '\n';
    }
}

DataConfig config_for(const AnchorDataset& ds) {
    DataConfig config;
    config.response = ds.response_name;
    bool any_categorical = false;
    for (const auto& enc : ds.encodings) {
        config.anchors.push_back({enc.name, enc.kind});
        any_categorical = any_categorical || enc.kind == AnchorKind::Categorical;
    }
    if (ds.has_levels() && !any_categorical) config.level_column = "level";
    return config;
}

}  // namespace anchorlab
