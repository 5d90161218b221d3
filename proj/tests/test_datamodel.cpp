#include "anchorlab/datamodel.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace anchorlab;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "anchorlab_datamodel";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream(path) << content;
    return path;
}

DataConfig env_config() { return parse_data_config(R"({"response": "y", "anchors": ["env"]})"); }

}  // namespace

TEST_CASE("csv with a categorical anchor") {
    const fs::path path = write_temp("basic.csv",
                                     "y,x1,env,x2\n"
                                     "1.0,2.0,b,0.5\n"
                                     "2.0,3.0,a,1.5\n"
                                     "3.5,1.0,b,-0.5\n"
                                     "0.5,0.0,c,2.0\n");
    const AnchorDataset ds = read_csv(path.string(), env_config());
    CHECK(ds.n() == 4);
    CHECK(ds.d() == 2);
    CHECK(ds.q() == 3);
    CHECK(ds.predictor_names == std::vector<std::string>{"x1", "x2"});
    CHECK(ds.level_labels == std::vector<std::string>{"a", "b", "c"});
    CHECK(ds.level_of_row == std::vector<Index>{1, 0, 1, 2});
    // dummies in sorted label order
    CHECK(ds.A(0, 1) == 1.0);
    CHECK(ds.A(1, 0) == 1.0);
    CHECK(ds.A(3, 2) == 1.0);
    CHECK(ds.A.row(2).sum() == 1.0);
    CHECK(ds.X(1, 1) == 1.5);
    CHECK(ds.Y(2) == 3.5);

    const auto levels = ds.levels();
    REQUIRE(levels.size() == 3);
    CHECK(levels[1].rows == std::vector<Index>{0, 2});
}

TEST_CASE("continuous anchors, drop columns and a level column") {
    const fs::path path = write_temp("cont.csv",
                                     "id,y,x1,a1,day\n"
                                     "7,1,2,0.3,mon\n"
                                     "8,2,1,-0.3,tue\n"
                                     "9,4,0,0.1,mon\n");
    const DataConfig cfg = parse_data_config(
        R"({"response": "y", "anchors": [{"name": "a1", "kind": "continuous"}],
            "drop_columns": ["id"], "level_column": "day"})");
    const AnchorDataset ds = read_csv(path.string(), cfg);
    CHECK(ds.d() == 1);
    CHECK(ds.q() == 1);
    CHECK(ds.A(1, 0) == doctest::Approx(-0.3));
    CHECK(ds.level_labels == std::vector<std::string>{"mon", "tue"});
    CHECK(ds.level_of_row == std::vector<Index>{0, 1, 0});
}

TEST_CASE("csv errors") {
    SUBCASE("empty file") {
        CHECK_THROWS_AS(read_csv(write_temp("empty.csv", "").string(), env_config()), EmptyInput);
        CHECK_THROWS_AS(read_csv(write_temp("header.csv", "y,x1,env\n").string(), env_config()), EmptyInput);
    }
    SUBCASE("missing column") {
        CHECK_THROWS_AS(read_csv(write_temp("nocol.csv", "y,x1\n1,2\n").string(), env_config()), MissingColumn);
    }
    SUBCASE("ragged row") {
        CHECK_THROWS_AS(read_csv(write_temp("ragged.csv", "y,x1,env\n1,2,a\n1,2\n").string(), env_config()),
                        ParseError);
    }
    SUBCASE("text predictor") {
        CHECK_THROWS_AS(read_csv(write_temp("text.csv", "y,x1,env\n1,foo,a\n2,bar,b\n").string(), env_config()),
                        NonNumericPredictor);
    }
    SUBCASE("one bad cell") {
        CHECK_THROWS_AS(read_csv(write_temp("cell.csv", "y,x1,env\n1,2,a\n2,3x,b\n").string(), env_config()),
                        ParseError);
    }
    SUBCASE("bad config") {
        CHECK_THROWS_AS(parse_data_config("{not json"), InvalidConfig);
        CHECK_THROWS_AS(parse_data_config(R"({"anchors": ["env"]})"), InvalidConfig);
    }
}

TEST_CASE("center is idempotent and stores means") {
    MatrixXd X(4, 2);
    X << 1, 2, 3, 4, 5, 6, 7, 8;
    VectorXd Y(4);
    Y << 1, 1, 2, 4;
    MatrixXd A(4, 1);
    A << 1, -1, 1, -1;
    const AnchorDataset ds = make_dataset(X, Y, A);
    const AnchorDataset c = center(ds);
    CHECK(c.centered);
    CHECK(c.X.colwise().sum().norm() < 1e-12);
    CHECK(c.Y.sum() == doctest::Approx(0.0));
    CHECK(c.x_means(0) == doctest::Approx(4.0));
    CHECK(c.y_mean == doctest::Approx(2.0));
    const AnchorDataset cc = center(c);
    CHECK((cc.X - c.X).norm() == 0.0);
    CHECK(cc.y_mean == c.y_mean);
}

TEST_CASE("subset_rows restores the raw scale and compacts levels") {
    MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    VectorXd Y(4);
    Y << 1, 2, 3, 4;
    AnchorDataset ds = make_dataset(X, Y, MatrixXd::Zero(4, 1));
    set_levels(ds, {"a", "b", "c", "b"});
    const AnchorDataset sub = subset_rows(center(ds), {1, 3});
    CHECK(sub.X(0, 0) == doctest::Approx(2.0));
    CHECK(sub.X(1, 0) == doctest::Approx(4.0));
    CHECK(sub.level_labels == std::vector<std::string>{"b"});
    CHECK(sub.level_of_row == std::vector<Index>{0, 0});
}

TEST_CASE("write_csv round trip") {
    Rng rng(4);
    MatrixXd X(30, 3);
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    VectorXd Y = X.rowwise().sum();
    std::vector<std::string> labels;
    for (Index i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? "north" : "south");
    auto [A, enc] = encode_anchors(labels);
    AnchorDataset ds = make_dataset(X, Y, A);
    ds.encodings = {enc};
    ds.encodings[0].name = "region";
    set_levels(ds, labels);

    const fs::path path = fs::temp_directory_path() / "anchorlab_datamodel" / "roundtrip.csv";
    write_csv(path.string(), ds);
    const AnchorDataset back = read_csv(path.string(), config_for(ds));
    CHECK((back.X - ds.X).norm() == 0.0);
    CHECK((back.Y - ds.Y).norm() == 0.0);
    CHECK((back.A - ds.A).norm() == 0.0);
    CHECK(back.level_labels == ds.level_labels);

    const DataConfig again = parse_data_config(data_config_to_json(config_for(ds)));
    CHECK(again.response == "y");
    REQUIRE(again.anchors.size() == 1);
    CHECK(again.anchors[0].name == "region");
    CHECK(again.anchors[0].kind == AnchorKind::Categorical);
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(make_dataset(MatrixXd::Zero(3, 1), VectorXd::Zero(2), MatrixXd::Zero(3, 1)), DimensionMismatch);
    MatrixXd X = MatrixXd::Zero(2, 1);
    X(0, 0) = std::nan("");
    CHECK_THROWS_AS(make_dataset(X, VectorXd::Zero(2), MatrixXd::Zero(2, 1)), DomainError);
    AnchorDataset ds = make_dataset(MatrixXd::Zero(2, 1), VectorXd::Zero(2), MatrixXd::Zero(2, 1));
    CHECK_THROWS_AS(set_levels(ds, {"a"}), DimensionMismatch);
    CHECK_THROWS_AS(ds.levels(), InvalidConfig);
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(1e20) == "1e+20");
}
