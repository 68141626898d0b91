#include "mvbu/pipeline/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvbu/error.hpp"

namespace mvbu::pipeline {

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed number '" + s + "' in " + path.string());
    }
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::vector<SummaryRow> summarize(const ParameterSpace& space, const samplers::PosteriorSamples& samples,
                                  const std::vector<double>& truth)
{
    require(samples.dim == static_cast<int>(space.size()), "sample dimension differs from the parameter space");
    require(samples.size() > 0, "no samples to summarize");
    require(truth.empty() || truth.size() == space.size(), "truth needs one value per parameter");
    std::vector<SummaryRow> rows;
    for (std::size_t k = 0; k < space.size(); ++k) {
        const auto col = samples.column(static_cast<int>(k));
        SummaryRow r;
        r.parameter = space[k].name;
        r.median = samplers::quantile(col, 0.5);
        r.q05 = samplers::quantile(col, 0.05);
        r.q95 = samplers::quantile(col, 0.95);
        if (!truth.empty()) {
            r.truth = truth[k];
            r.has_truth = true;
        }
        rows.push_back(r);
    }
    return rows;
}

std::string cdf_svg(const std::string& title, const std::vector<std::pair<double, double>>& cdf, double lower,
                    double upper, bool log_axis, const double* truth)
{
    constexpr double W = 480, H = 320, L = 60, R = 20, T = 30, B = 50;
    const auto tx = [&](double v) { return log_axis ? std::log10(v) : v; };
    const double x0 = tx(lower), x1 = tx(upper);
    const auto px = [&](double v) { return L + (tx(std::clamp(v, lower, upper)) - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double p) { return H - B - p * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape_xml(title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0})
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(p) + 4 << "\" text-anchor=\"end\">" << p << "</text>\n";
    // Axis ticks: decades on a log axis, five even steps otherwise.
    std::vector<double> ticks;
    if (log_axis) {
        for (double d = std::ceil(x0); d <= std::floor(x1) + 1e-9; d += 1.0) ticks.push_back(std::pow(10.0, d));
        if (ticks.size() < 2) ticks = {lower, upper};
    } else {
        for (int i = 0; i <= 4; ++i) ticks.push_back(lower + (upper - lower) * i / 4.0);
    }
    for (double t : ticks)
        os << "<text x=\"" << px(t) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << short_num(t)
           << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
       << (log_axis ? "value (log scale)" : "value") << "</text>\n";

    os << "<path fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"1.5\" d=\"M" << px(lower) << ',' << py(0.0);
    double prev = 0.0;
    for (const auto& [v, p] : cdf) {
        os << " H" << px(v) << " V" << py(p);
        prev = p;
    }
    os << " H" << px(upper) << " V" << py(prev) << "\"/>\n";
    if (truth)
        os << "<line x1=\"" << px(*truth) << "\" x2=\"" << px(*truth) << "\" y1=\"" << T << "\" y2=\"" << H - B
           << "\" stroke=\"#c0392b\" stroke-dasharray=\"5,3\"/>\n";
    os << "</svg>\n";
    return os.str();
}

std::vector<std::filesystem::path> emit_report(const ParameterSpace& space, const samplers::PosteriorSamples& samples,
                                               const std::vector<double>& truth, const std::filesystem::path& dir)
{
    const auto rows = summarize(space, samples, truth);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    for (std::size_t k = 0; k < space.size(); ++k) {
        const auto& spec = space[k];
        const auto cdf = samplers::empirical_cdf(samples.column(static_cast<int>(k)));
        std::string csv = "value,cdf\n";
        for (const auto& [v, p] : cdf) csv += num(v) + ',' + num(p) + '\n';
        const auto csv_path = dir / ("cdf_" + spec.name + ".csv");
        write_file(csv_path, csv);
        const auto svg_path = dir / ("cdf_" + spec.name + ".svg");
        write_file(svg_path, cdf_svg(spec.name, cdf, spec.lower, spec.upper, spec.prior == PriorKind::LogUniform,
                                     rows[k].has_truth ? &rows[k].truth : nullptr));
        written.push_back(csv_path);
        written.push_back(svg_path);
    }

    std::string summary = "# quantiles: type 7, linear interpolation at position (n - 1) p of the sorted samples; n = " +
                          std::to_string(samples.size()) + "\nparameter,median,q05,q95,truth\n";
    for (const auto& r : rows)
        summary += r.parameter + ',' + num(r.median) + ',' + num(r.q05) + ',' + num(r.q95) + ',' +
                   (r.has_truth ? num(r.truth) : std::string()) + '\n';
    const auto summary_path = dir / "summary.csv";
    write_file(summary_path, summary);
    written.push_back(summary_path);
    return written;
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::string line;
    bool header = false;
    std::vector<SummaryRow> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "parameter,median,q05,q95,truth") throw IoError("unexpected summary header in " + path.string());
            header = true;
            continue;
        }
        auto cells = split(line, ',');
        if (cells.size() == 4) cells.emplace_back();
        if (cells.size() != 5) throw IoError("summary row needs 5 cells in " + path.string());
        SummaryRow r;
        r.parameter = cells[0];
        r.median = parse_double(cells[1], path);
        r.q05 = parse_double(cells[2], path);
        r.q95 = parse_double(cells[3], path);
        r.has_truth = !cells[4].empty();
        if (r.has_truth) r.truth = parse_double(cells[4], path);
        rows.push_back(r);
    }
    if (!header) throw IoError("missing summary header in " + path.string());
    return rows;
}

std::vector<std::pair<double, double>> read_cdf_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "value,cdf") throw IoError("unexpected CDF header in " + path.string());
    std::vector<std::pair<double, double>> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) throw IoError("CDF row needs 2 cells in " + path.string());
        out.emplace_back(parse_double(cells[0], path), parse_double(cells[1], path));
    }
    return out;
}

} // namespace mvbu::pipeline
