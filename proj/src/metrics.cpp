#include "vseg/metrics.hpp"

#include <sstream>
#include <stdexcept>

namespace vseg {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

void derive_rates(EvalReport& r) {
    r.accuracy = ratio(r.tp + r.tn, r.tp + r.tn + r.fp + r.fn);
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    r.dice = ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn);
}

}  // namespace

EvalReport evaluate(const Volume& pred, const Volume& truth) {
    if (pred.dtype != VoxelType::mask_u8 || truth.dtype != VoxelType::mask_u8)
        throw std::invalid_argument("evaluate: inputs must be binary masks");
    pred.validate();
    truth.validate();
    if (pred.dims != truth.dims)
        throw std::invalid_argument("evaluate: pred and truth dims differ");

    EvalReport r;
    for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
        const bool p = pred.voxels[i] != 0.0f;
        const bool g = truth.voxels[i] != 0.0f;
        if (p && g)
            ++r.tp;
        else if (p)
            ++r.fp;
        else if (g)
            ++r.fn;
        else
            ++r.tn;
    }
    derive_rates(r);
    return r;
}

EvalReport aggregate(const std::vector<EvalReport>& reports, AggregateMode mode) {
    if (reports.empty()) throw std::invalid_argument("aggregate: empty report list");

    EvalReport out;
    for (const auto& r : reports) {
        out.tp += r.tp;
        out.fp += r.fp;
        out.fn += r.fn;
        out.tn += r.tn;
    }
    if (mode == AggregateMode::micro) {
        derive_rates(out);
        return out;
    }

    auto mean_of = [&](std::optional<double> EvalReport::*field, int EvalReport::*skipped) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : reports) {
            if ((r.*field).has_value()) {
                sum += *(r.*field);
                ++n;
            } else {
                ++(out.*skipped);
            }
        }
        if (n > 0) out.*field = sum / n;
    };
    mean_of(&EvalReport::precision, &EvalReport::skipped_precision);
    mean_of(&EvalReport::recall, &EvalReport::skipped_recall);
    mean_of(&EvalReport::dice, &EvalReport::skipped_dice);
    double acc_sum = 0.0;
    int acc_n = 0;
    for (const auto& r : reports)
        if (r.accuracy.has_value()) {
            acc_sum += *r.accuracy;
            ++acc_n;
        }
    if (acc_n > 0) out.accuracy = acc_sum / acc_n;
    return out;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os.precision(6);
    os << "tp=" << report.tp << " fp=" << report.fp << " fn=" << report.fn
       << " tn=" << report.tn;
    auto rate = [&](const char* name, const std::optional<double>& v) {
        os << " " << name << "=";
        if (v.has_value())
            os << *v;
        else
            os << "undefined";
    };
    rate("accuracy", report.accuracy);
    rate("precision", report.precision);
    rate("recall", report.recall);
    rate("dice", report.dice);
    return os.str();
}

}  // namespace vseg
