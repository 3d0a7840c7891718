#include "falab/data.hpp"

#include "falab/errors.hpp"
#include "falab/format.hpp"
#include "falab/random.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace falab {

Dataset gen_synthetic(std::size_t n, std::size_t d, const TeacherSpec& teacher,
                      std::uint64_t seed, std::string_view suffix) {
    if (n == 0 || d == 0) throw ContractViolation("gen_synthetic: n and d must be positive");
    if (teacher.p_teacher == 0) throw ContractViolation("gen_synthetic: teacher width must be positive");
    if (teacher.d != d) throw ContractViolation("gen_synthetic: teacher input dimension differs from d");
    const std::string sfx(suffix);
    auto xs = derive_stream(seed, "X" + sfx);
    auto ws = derive_stream(seed, teacher.label + "_W" + sfx);
    auto bs = derive_stream(seed, teacher.label + "_beta" + sfx);

    Dataset data;
    data.X = gaussian_matrix(xs, n, d, 1.0 / std::sqrt(static_cast<double>(d)));
    Matrix W = gaussian_matrix(ws, teacher.p_teacher, d, 1.0);
    Vector beta = gaussian(bs, teacher.p_teacher, 1.0);
    const TwoLayerNet f0(std::move(W), std::move(beta), Vector(teacher.p_teacher, 0.0), teacher.act);
    data.y = forward(f0, data.X);

    if (teacher.act == Activation::identity) {
        double m = 0.0;
        for (double v : data.y) m = std::max(m, std::abs(v));
        if (m > 1e3) std::clog << "warning: teacher labels reach |y| = " << m << "\n";
    }
    return data;
}

Vector project_y(const Matrix& X, std::span<const double> y) {
    if (X.rows() != y.size()) throw ContractViolation("project_y: X and y disagree on n");
    const SymEig eig = sym_eig(gram(transpose(X)));
    if (!(eig.values.front() > 1e-10))
        throw ContractViolation("project_y: X does not have full column rank");
    // ȳ = X V Λ⁻¹ Vᵀ Xᵀ y
    Vector c = matvec_t(eig.vectors, matvec_t(X, y));
    for (std::size_t k = 0; k < c.size(); ++k) c[k] /= eig.values[k];
    return matvec(X, matvec(eig.vectors, c));
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    validate(data);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    std::string line;
    for (std::size_t k = 0; k < data.d(); ++k) line += "x" + std::to_string(k) + ",";
    line += "y\n";
    out << line;
    for (std::size_t i = 0; i < data.n(); ++i) {
        line.clear();
        for (double v : data.X.row(i)) {
            line += format_double(v);
            line += ',';
        }
        line += format_double(data.y[i]);
        line += '\n';
        out << line;
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line.empty()) throw EmptyDatasetError("'" + path.string() + "' is empty");
    const auto header = split(line);
    if (header.size() < 2 || header.back() != "y")
        throw ParseError("header must be x0,...,x{d-1},y", lineno);
    for (std::size_t k = 0; k + 1 < header.size(); ++k)
        if (header[k] != "x" + std::to_string(k))
            throw ParseError("header field " + std::to_string(k + 1) + " should be x" +
                                 std::to_string(k),
                             lineno);
    const std::size_t d = header.size() - 1;

    std::vector<double> xs;
    Vector ys;
    while (next_line()) {
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != d + 1)
            throw SchemaError("expected " + std::to_string(d + 1) + " fields, found " +
                                  std::to_string(fields.size()),
                              lineno);
        for (std::size_t k = 0; k <= d; ++k) {
            double v = 0.0;
            if (!parse_double(fields[k], v) || !std::isfinite(v))
                throw ParseError("field " + std::to_string(k + 1) + " is not a finite number: '" +
                                     std::string(fields[k]) + "'",
                                 lineno);
            if (k < d)
                xs.push_back(v);
            else
                ys.push_back(v);
        }
    }
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    if (ys.empty()) throw EmptyDatasetError("'" + path.string() + "' has no data rows");
    return Dataset{Matrix(ys.size(), d, std::move(xs)), std::move(ys)};
}

} // namespace falab
