#include "qmnum/serialize.hpp"

namespace qmnum::io {

nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            data.push_back({m(i, j).real(), m(i, j).imag()});
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Mat matrix_from_json(const nlohmann::json& j) {
    require(j.contains("rows") && j.contains("cols") && j.contains("data"),
            "matrix_from_json: missing keys");
    Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    require(rows >= 0 && cols >= 0, "matrix_from_json: negative dims");
    require(static_cast<Eigen::Index>(data.size()) == rows * cols,
            "matrix_from_json: data length mismatch");
    Mat m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2, ++k)
            m(i, j2) = cxd(data[k][0].get<double>(), data[k][1].get<double>());
    return m;
}

}  // namespace qmnum::io
