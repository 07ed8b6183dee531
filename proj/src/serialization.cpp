#include "rscn/serialization.hpp"

#include "rscn/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rscn {

using nlohmann::json;

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* field)
{
    if (!j.is_array()) throw schema_error(std::string("field '") + field + "' must be an array");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw schema_error(std::string("field '") + field + "' is not a rectangular matrix");
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number())
                throw schema_error(std::string("field '") + field + "' has a non-numeric entry");
            m(i, c) = v.get<double>();
        }
    }
    return m;
}

json model_to_json(const ReservoirModel& model)
{
    json j;
    j["version"] = model_format_version;
    j["n_nodes"] = model.n_nodes();
    j["n_inputs"] = model.n_inputs();
    j["n_outputs"] = model.n_outputs();
    j["activation"] = to_string(model.activation);
    j["structure_tag"] = to_string(model.structure);
    j["initial_block_size"] = model.initial_block_size;
    j["input_weights"] = matrix_to_json(model.input_weights);
    j["feedback"] = matrix_to_json(model.feedback);
    j["biases"] = std::vector<double>(model.biases.data(), model.biases.data() + model.biases.size());
    j["readout"] = matrix_to_json(model.readout);
    return j;
}

ReservoirModel model_from_json(const json& j)
{
    try {
        if (j.at("version").get<int>() != model_format_version)
            throw schema_error("unsupported model version " + j.at("version").dump());
        ReservoirModel m;
        m.activation = parse_activation(j.at("activation").get<std::string>());
        m.structure = parse_structure(j.at("structure_tag").get<std::string>());
        m.initial_block_size = j.at("initial_block_size").get<Index>();
        const auto n = j.at("n_nodes").get<Index>();
        const auto k = j.at("n_inputs").get<Index>();
        const auto l = j.at("n_outputs").get<Index>();

        m.input_weights = matrix_from_json(j.at("input_weights"), "input_weights");
        m.feedback = matrix_from_json(j.at("feedback"), "feedback");
        const auto b = j.at("biases").get<std::vector<double>>();
        m.biases = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
        m.readout = matrix_from_json(j.at("readout"), "readout");
        // Empty nested arrays lose their column count.
        if (m.input_weights.rows() == 0) m.input_weights.resize(0, k);
        if (m.feedback.rows() == 0) m.feedback.resize(0, 0);
        if (m.readout.rows() == 0) m.readout.resize(0, n + k);

        if (m.n_nodes() != n || m.n_inputs() != k || (l > 0 && m.n_outputs() != l))
            throw schema_error("model dimensions do not match n_nodes/n_inputs/n_outputs");
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw schema_error(std::string("malformed model document: ") + e.what());
    } catch (const contract_violation& e) {
        throw schema_error(std::string("inconsistent model document: ") + e.what());
    }
}

void save_model(const ReservoirModel& model, const std::filesystem::path& path)
{
    write_file_atomic(path, model_to_json(model).dump(1) + "\n");
}

ReservoirModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw schema_error("cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw schema_error("cannot parse " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

std::string format_number(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw schema_error("cannot write " + tmp.string());
        out << contents;
        if (!out) throw schema_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace rscn
