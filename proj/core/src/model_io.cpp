#include "hmtl/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace hmtl {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_matrix(std::ostream& os, const Matrix& a) {
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j)
                os << ' ';
            os << format_double(a(i, j));
        }
        os << '\n';
    }
}

template <class T>
void write_list(std::ostream& os, const char* key, const std::vector<T>& values) {
    os << key << ' ' << values.size();
    for (const auto& v : values) {
        if constexpr (std::is_floating_point_v<T>)
            os << ' ' << format_double(v);
        else
            os << ' ' << v;
    }
    os << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    void expect(const std::string& key) {
        std::string tok = word();
        if (tok != key)
            throw ParseError("model file: expected '" + key + "' but found '" + tok + "'");
    }

    std::string word() {
        std::string tok;
        if (!(is_ >> tok))
            throw ParseError("model file: unexpected end of input");
        return tok;
    }

    double number() {
        const std::string tok = word();
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size())
                throw ParseError("model file: bad number '" + tok + "'");
            return v;
        } catch (const std::logic_error&) {
            throw ParseError("model file: bad number '" + tok + "'");
        }
    }

    long integer() {
        const double v = number();
        if (v != static_cast<double>(static_cast<long>(v)))
            throw ParseError("model file: expected an integer");
        return static_cast<long>(v);
    }

    Matrix matrix(Index rows, Index cols) {
        Matrix a(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
                a(i, j) = number();
        return a;
    }

private:
    std::istream& is_;
};

}  // namespace

void write_model(std::ostream& os, const HmtlModel& model) {
    const auto T = model.weights.thetas.size();
    if (model.precisions.omegas.size() != T || T == 0)
        throw InvalidInput("write_model: weights and precisions must have the same nonzero count");
    const Index d = model.weights.thetas.front().rows();
    const Index m = model.weights.thetas.front().cols();
    os << "hmtl-model 1\n";
    os << "dims " << T << ' ' << m << ' ' << d << '\n';
    os << "lambdas " << format_double(model.hyper.lambda0) << ' ' << format_double(model.hyper.lambda1) << ' '
       << format_double(model.hyper.lambda2) << '\n';
    for (std::size_t t = 0; t < T; ++t) {
        os << "theta " << t << '\n';
        write_matrix(os, model.weights.thetas[t]);
    }
    for (std::size_t t = 0; t < T; ++t) {
        os << "omega " << t << '\n';
        write_matrix(os, model.precisions.omegas[t]);
    }
    const auto& r = model.report;
    os << "report " << r.outer_iterations << ' ' << (r.converged ? 1 : 0) << ' ' << r.omega_rejections << ' '
       << format_double(r.min_omega_eigenvalue) << ' ' << format_double(r.elapsed_seconds) << '\n';
    os << "initial_objective " << format_double(r.initial_objective) << '\n';
    write_list(os, "objective_trace", r.objective_trace);
    write_list(os, "admm_iterations", r.admm_iterations);
    write_list(os, "theta_iterations", r.theta_iterations);
    os << "end\n";
}

HmtlModel read_model(std::istream& is) {
    Reader rd(is);
    rd.expect("hmtl-model");
    if (rd.integer() != 1)
        throw ParseError("model file: unsupported version");
    rd.expect("dims");
    const long T = rd.integer();
    const long m = rd.integer();
    const long d = rd.integer();
    if (T < 1 || m < 1 || d < 1)
        throw ParseError("model file: dimensions must be positive");

    HmtlModel model;
    rd.expect("lambdas");
    model.hyper.lambda0 = rd.number();
    model.hyper.lambda1 = rd.number();
    model.hyper.lambda2 = rd.number();
    for (long t = 0; t < T; ++t) {
        rd.expect("theta");
        if (rd.integer() != t)
            throw ParseError("model file: theta blocks out of order");
        model.weights.thetas.push_back(rd.matrix(d, m));
    }
    for (long t = 0; t < T; ++t) {
        rd.expect("omega");
        if (rd.integer() != t)
            throw ParseError("model file: omega blocks out of order");
        model.precisions.omegas.push_back(rd.matrix(m, m));
    }
    auto& r = model.report;
    rd.expect("report");
    r.outer_iterations = static_cast<int>(rd.integer());
    r.converged = rd.integer() != 0;
    r.omega_rejections = static_cast<int>(rd.integer());
    r.min_omega_eigenvalue = rd.number();
    r.elapsed_seconds = rd.number();
    rd.expect("initial_objective");
    r.initial_objective = rd.number();
    rd.expect("objective_trace");
    for (long n = rd.integer(); n > 0; --n)
        r.objective_trace.push_back(rd.number());
    rd.expect("admm_iterations");
    for (long n = rd.integer(); n > 0; --n)
        r.admm_iterations.push_back(static_cast<int>(rd.integer()));
    rd.expect("theta_iterations");
    for (long n = rd.integer(); n > 0; --n)
        r.theta_iterations.push_back(static_cast<int>(rd.integer()));
    rd.expect("end");
    return model;
}

void save_model(const std::string& path, const HmtlModel& model) {
    std::ofstream os(path);
    if (!os)
        throw InvalidInput("cannot open '" + path + "' for writing");
    write_model(os, model);
    if (!os)
        throw InvalidInput("failed writing '" + path + "'");
}

HmtlModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open model file '" + path + "'");
    return read_model(is);
}

}  // namespace hmtl
