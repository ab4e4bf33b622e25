#include "lexalign/plsr.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "lexalign/error.hpp"
#include "lexalign/util.hpp"

namespace lexalign {

namespace {

constexpr double kTiny = 1e-12;

// Gauss-Jordan inverse with partial pivoting; K is small (component count).
Matrix invert(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(work(r, col)) > std::fabs(work(pivot, col))) pivot = r;
        if (std::fabs(work(pivot, col)) < 1e-300)
            throw Error(ErrorKind::rank, "loading-weight system is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work(pivot, c), work(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const double d = work(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            work(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                work(r, c) -= f * work(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

}

PlsrModel plsr_fit(const Matrix& x, const Matrix& y, int n_components, const PlsrOptions& opt) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    const std::size_t m = y.cols();
    if (y.rows() != n)
        throw Error(ErrorKind::shape, "predictor and target row counts differ");
    if (n < 3) throw Error(ErrorKind::domain, "plsr needs at least 3 training rows");
    if (p < 1 || m < 1) throw Error(ErrorKind::shape, "empty predictor or target matrix");
    const int bound = static_cast<int>(std::min(n - 1, p));
    if (n_components < 1 || n_components > bound)
        throw Error(ErrorKind::rank,
                    "n_components " + std::to_string(n_components) + " outside [1, " +
                        std::to_string(bound) + "] for " + std::to_string(n) + " rows and " +
                        std::to_string(p) + " predictors");

    PlsrModel model;
    model.x_mean.assign(p, 0.0);
    model.x_scale.assign(p, 1.0);
    model.y_mean.assign(m, 0.0);

    for (std::size_t j = 0; j < p; ++j) {
        double mn = x(0, j), mx = x(0, j), sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(i, j);
            sum += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (mn == mx)
            throw Error(ErrorKind::degenerate_predictor,
                        "predictor column " + std::to_string(j) + " is constant");
        model.x_mean[j] = sum / static_cast<double>(n);
        if (opt.scale_predictors) {
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x(i, j) - model.x_mean[j];
                ss += d * d;
            }
            model.x_scale[j] = std::sqrt(ss / static_cast<double>(n - 1));
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += y(i, j);
        model.y_mean[j] = sum / static_cast<double>(n);
    }

    Matrix xd(n, p), yd(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j)
            xd(i, j) = (x(i, j) - model.x_mean[j]) / model.x_scale[j];
        for (std::size_t j = 0; j < m; ++j) yd(i, j) = y(i, j) - model.y_mean[j];
    }

    const std::size_t kmax = static_cast<std::size_t>(n_components);
    Matrix w_all(p, kmax), p_all(p, kmax), q_all(m, kmax), t_all(n, kmax);
    std::vector<double> u(n), w(p), w_old(p), t(n), q(m);
    std::size_t extracted = 0;

    for (std::size_t k = 0; k < kmax; ++k) {
        // Residual checks: stop once X or Y carries no usable variance.
        double xmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) xmax = std::max(xmax, std::fabs(xd(i, j)));
        if (xmax < kTiny) break;

        std::size_t ycol = m;
        double ybest = kTiny;
        for (std::size_t j = 0; j < m; ++j) {
            double cmax = 0.0;
            for (std::size_t i = 0; i < n; ++i) cmax = std::max(cmax, std::fabs(yd(i, j)));
            if (cmax > ybest) {
                ycol = j;
                ybest = cmax;
                break;  // first column with residual variance
            }
        }
        if (ycol == m) break;
        for (std::size_t i = 0; i < n; ++i) u[i] = yd(i, ycol);

        std::fill(w_old.begin(), w_old.end(), 0.0);
        double tt = 0.0;
        bool usable = true;
        for (int it = 0; it < opt.max_iter; ++it) {
            // products against Xd' and Yd' accumulate row by row so the sums
            // stay in ascending-i order while the traversal stays row-major
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double ui = u[i];
                const auto row = xd.row(i);
                for (std::size_t j = 0; j < p; ++j) w[j] += row[j] * ui;
            }
            double wnorm = 0.0;
            for (std::size_t j = 0; j < p; ++j) wnorm += w[j] * w[j];
            wnorm = std::sqrt(wnorm);
            if (wnorm < kTiny) {
                usable = false;
                break;
            }
            for (std::size_t j = 0; j < p; ++j) w[j] /= wnorm;

            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < p; ++j) s += xd(i, j) * w[j];
                t[i] = s;
            }
            tt = 0.0;
            for (std::size_t i = 0; i < n; ++i) tt += t[i] * t[i];
            if (tt < kTiny) {
                usable = false;
                break;
            }

            std::fill(q.begin(), q.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double ti = t[i];
                const auto row = yd.row(i);
                for (std::size_t j = 0; j < m; ++j) q[j] += row[j] * ti;
            }
            for (std::size_t j = 0; j < m; ++j) q[j] /= tt;
            double qq = 0.0;
            for (std::size_t j = 0; j < m; ++j) qq += q[j] * q[j];
            if (qq < kTiny * kTiny) break;  // y residual orthogonal to this score

            double dw = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = w[j] - w_old[j];
                dw += d * d;
            }
            if (dw < opt.tol) break;
            w_old = w;

            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += yd(i, j) * q[j];
                u[i] = s / qq;
            }
        }
        if (!usable) break;

        std::vector<double> pk(p, 0.0), qk(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double ti = t[i];
            const auto xrow = xd.row(i);
            for (std::size_t j = 0; j < p; ++j) pk[j] += xrow[j] * ti;
            const auto yrow = yd.row(i);
            for (std::size_t j = 0; j < m; ++j) qk[j] += yrow[j] * ti;
        }
        for (std::size_t j = 0; j < p; ++j) {
            pk[j] /= tt;
            w_all(j, k) = w[j];
            p_all(j, k) = pk[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            qk[j] /= tt;
            q_all(j, k) = qk[j];
        }
        for (std::size_t i = 0; i < n; ++i) t_all(i, k) = t[i];

        for (std::size_t i = 0; i < n; ++i) {
            const double ti = t[i];
            auto xrow = xd.row(i);
            for (std::size_t j = 0; j < p; ++j) xrow[j] -= ti * pk[j];
            auto yrow = yd.row(i);
            for (std::size_t j = 0; j < m; ++j) yrow[j] -= ti * qk[j];
        }
        ++extracted;
    }

    const std::size_t kk = extracted;
    model.n_components = static_cast<int>(kk);
    model.x_weights = Matrix(p, kk);
    model.x_loadings = Matrix(p, kk);
    model.y_loadings = Matrix(m, kk);
    model.x_scores = Matrix(n, kk);
    for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t j = 0; j < p; ++j) {
            model.x_weights(j, k) = w_all(j, k);
            model.x_loadings(j, k) = p_all(j, k);
        }
        for (std::size_t j = 0; j < m; ++j) model.y_loadings(j, k) = q_all(j, k);
        for (std::size_t i = 0; i < n; ++i) model.x_scores(i, k) = t_all(i, k);
    }

    model.coef = Matrix(p, m);
    if (kk > 0) {
        // coef = W (P'W)^{-1} Q'
        Matrix pw(kk, kk);
        for (std::size_t a = 0; a < kk; ++a)
            for (std::size_t b = 0; b < kk; ++b) {
                double s = 0.0;
                for (std::size_t j = 0; j < p; ++j) s += model.x_loadings(j, a) * model.x_weights(j, b);
                pw(a, b) = s;
            }
        const Matrix pw_inv = invert(pw);
        Matrix rot(p, kk);  // W (P'W)^{-1}
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t b = 0; b < kk; ++b) {
                double s = 0.0;
                for (std::size_t a = 0; a < kk; ++a) s += model.x_weights(j, a) * pw_inv(a, b);
                rot(j, b) = s;
            }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t c = 0; c < m; ++c) {
                double s = 0.0;
                for (std::size_t k = 0; k < kk; ++k) s += rot(j, k) * model.y_loadings(c, k);
                model.coef(j, c) = s;
            }
    }
    return model;
}

std::vector<double> plsr_predict_row(const PlsrModel& model, std::span<const double> x_row) {
    const std::size_t p = model.x_mean.size();
    const std::size_t m = model.y_mean.size();
    if (x_row.size() != p)
        throw Error(ErrorKind::shape, "prediction row has " + std::to_string(x_row.size()) +
                                          " predictors, model expects " + std::to_string(p));
    std::vector<double> xc(p);
    for (std::size_t j = 0; j < p; ++j) xc[j] = (x_row[j] - model.x_mean[j]) / model.x_scale[j];
    std::vector<double> out(m);
    for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += xc[j] * model.coef(j, c);
        out[c] = s + model.y_mean[c];
    }
    return out;
}

Matrix plsr_predict(const PlsrModel& model, const Matrix& x_new) {
    Matrix out(x_new.rows(), model.y_mean.size());
    for (std::size_t i = 0; i < x_new.rows(); ++i) {
        const auto row = plsr_predict_row(model, x_new.row(i));
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

namespace {

struct FoldError {
    bool failed = false;
    ErrorKind kind = ErrorKind::domain;
    std::string message;
    int index = std::numeric_limits<int>::max();
};

}

PredictionMatrix loocv_stack(const EmbeddingTable& emb, const RetainedFeatureSet& retained,
                             const AnnotationTable& ann, int n_components,
                             const PlsrOptions& opt) {
    if (retained.indices.empty())
        throw Error(ErrorKind::domain, "retained feature set is empty");
    for (int f : retained.indices)
        if (f < 0 || f >= emb.dims())
            throw Error(ErrorKind::domain,
                        "retained feature index " + std::to_string(f) + " outside [0, " +
                            std::to_string(emb.dims()) + ")");
    const int n = ann.word_count();
    if (n < 4)
        throw Error(ErrorKind::domain, "leave-one-out stacking needs at least 4 annotated words");

    const EmbeddingTable sub = emb.subset(ann.words);
    const std::size_t p = retained.indices.size();
    Matrix x(static_cast<std::size_t>(n), p);
    for (int i = 0; i < n; ++i) {
        const auto r = sub.row(i);
        for (std::size_t j = 0; j < p; ++j)
            x(static_cast<std::size_t>(i), j) = r[static_cast<std::size_t>(retained.indices[j])];
    }

    PredictionMatrix pm;
    pm.words = ann.words;
    pm.dims = ann.dim_names;
    pm.ground_truth = ann.values;
    pm.values = Matrix(static_cast<std::size_t>(n), ann.values.cols());

    FoldError err;
#pragma omp parallel for schedule(dynamic)
    for (int w = 0; w < n; ++w) {
        try {
            Matrix x_train(static_cast<std::size_t>(n) - 1, p);
            Matrix y_train(static_cast<std::size_t>(n) - 1, ann.values.cols());
            std::size_t r = 0;
            for (int i = 0; i < n; ++i) {
                if (i == w) continue;
                std::copy(x.row(static_cast<std::size_t>(i)).begin(),
                          x.row(static_cast<std::size_t>(i)).end(), x_train.row(r).begin());
                std::copy(ann.values.row(static_cast<std::size_t>(i)).begin(),
                          ann.values.row(static_cast<std::size_t>(i)).end(),
                          y_train.row(r).begin());
                ++r;
            }
            const PlsrModel model = plsr_fit(x_train, y_train, n_components, opt);
            const auto pred = plsr_predict_row(model, x.row(static_cast<std::size_t>(w)));
            std::copy(pred.begin(), pred.end(), pm.values.row(static_cast<std::size_t>(w)).begin());
        } catch (const Error& e) {
#pragma omp critical(lexalign_loocv_error)
            {
                if (!err.failed || w < err.index) {
                    err.failed = true;
                    err.kind = e.kind();
                    err.message = "fold '" + ann.words[static_cast<std::size_t>(w)] +
                                  "': " + e.what();
                    err.index = w;
                }
            }
        }
    }
    if (err.failed) throw Error(err.kind, err.message);
    return pm;
}

PredictionMatrix condense_domains(const PredictionMatrix& pm, const DomainMap& map) {
    std::vector<int> domain_of(pm.dims.size());
    for (std::size_t j = 0; j < pm.dims.size(); ++j) {
        const auto it = std::find(map.dims.begin(), map.dims.end(), pm.dims[j]);
        if (it == map.dims.end())
            throw Error(ErrorKind::mapping,
                        "dimension '" + pm.dims[j] + "' has no domain assignment");
        const auto& dom = map.domains[static_cast<std::size_t>(it - map.dims.begin())];
        const auto dit = std::find(map.domain_order.begin(), map.domain_order.end(), dom);
        domain_of[j] = static_cast<int>(dit - map.domain_order.begin());
    }

    const std::size_t nd = map.domain_order.size();
    std::vector<int> members(nd, 0);
    for (int d : domain_of) ++members[static_cast<std::size_t>(d)];
    for (std::size_t d = 0; d < nd; ++d)
        if (members[d] == 0)
            throw Error(ErrorKind::mapping,
                        "domain '" + map.domain_order[d] + "' has no member dimensions");

    PredictionMatrix out;
    out.words = pm.words;
    out.dims = map.domain_order;
    out.values = Matrix(pm.values.rows(), nd);
    out.ground_truth = Matrix(pm.values.rows(), nd);
    for (std::size_t i = 0; i < pm.values.rows(); ++i) {
        for (std::size_t j = 0; j < pm.dims.size(); ++j) {
            const auto d = static_cast<std::size_t>(domain_of[j]);
            out.values(i, d) += pm.values(i, j);
            out.ground_truth(i, d) += pm.ground_truth(i, j);
        }
        for (std::size_t d = 0; d < nd; ++d) {
            out.values(i, d) /= static_cast<double>(members[d]);
            out.ground_truth(i, d) /= static_cast<double>(members[d]);
        }
    }
    return out;
}

namespace {

void emit_table(const std::vector<std::string>& words, const std::vector<std::string>& dims,
                const Matrix& values, std::ostream& out) {
    out << "word";
    for (const auto& d : dims) out << ',' << d;
    out << '\n';
    for (std::size_t i = 0; i < words.size(); ++i) {
        out << words[i];
        for (std::size_t j = 0; j < dims.size(); ++j) out << ',' << format_g(values(i, j), 17);
        out << '\n';
    }
}

void parse_table(std::istream& in, std::vector<std::string>& words,
                 std::vector<std::string>& dims, Matrix& values, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::format, std::string(what) + " stream is empty");
    auto header = split(line, ',');
    if (header.size() < 2 || to_lower(trim(header[0])) != "word")
        throw Error(ErrorKind::format, std::string(what) + " header must start with 'word'");
    dims.assign(header.begin() + 1, header.end());

    std::vector<double> data;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != dims.size() + 1)
            throw Error(ErrorKind::format, std::string(what) + ": row width mismatch");
        words.emplace_back(trim(fields[0]));
        for (std::size_t j = 1; j < fields.size(); ++j) {
            bool ok = false;
            const double v = parse_number(fields[j], ok);
            if (!ok)
                throw Error(ErrorKind::format,
                            std::string(what) + ": bad value '" + fields[j] + "'");
            data.push_back(v);
        }
    }
    values = Matrix(words.size(), dims.size());
    std::copy(data.begin(), data.end(), values.data());
}

}

void emit_predictions(const PredictionMatrix& pm, std::ostream& values_out) {
    emit_table(pm.words, pm.dims, pm.values, values_out);
}

void emit_ground_truth(const PredictionMatrix& pm, std::ostream& truth_out) {
    emit_table(pm.words, pm.dims, pm.ground_truth, truth_out);
}

PredictionMatrix parse_predictions(std::istream& values_in, std::istream& truth_in) {
    PredictionMatrix pm;
    parse_table(values_in, pm.words, pm.dims, pm.values, "predictions");
    std::vector<std::string> twords, tdims;
    parse_table(truth_in, twords, tdims, pm.ground_truth, "ground truth");
    if (twords != pm.words || tdims != pm.dims)
        throw Error(ErrorKind::domain,
                    "prediction and ground-truth tables cover different words or dimensions");
    return pm;
}

}
