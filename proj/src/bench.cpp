#include "srmcts/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace srmcts {

std::string_view to_string(Aggregate a) noexcept { return a == Aggregate::median ? "median" : "mean"; }

Aggregate aggregate_from_string(std::string_view name)
{
    if (name == "median") return Aggregate::median;
    if (name == "mean") return Aggregate::mean;
    throw std::invalid_argument("unknown aggregate: " + std::string(name));
}

double aggregate(std::vector<double> v, Aggregate how)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (how == Aggregate::mean) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string format_real(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// -- one job ---------------------------------------------------------------------

BenchRow run_one(const Dataset& ds, std::uint64_t seed, const BenchConfig& cfg, const ModelSnapshot& initial,
                 const std::vector<MutationEntry>& corpus)
{
    auto [train, test] = split_dataset(ds, seed);
    train.id = ds.id;
    CampaignConfig cc = cfg.campaign;
    cc.seed = splitmix64(cfg.campaign.seed ^ splitmix64(seed + 1));
    cc.trial.solve_threshold = cfg.solve_threshold;
    const auto roster = build_roster({std::make_shared<const Dataset>(std::move(train))}, cc);
    const auto rep = run_campaign(roster, cc, initial, corpus);
    const DatasetOutcome& o = rep.datasets.front();

    BenchRow row;
    row.dataset = ds.id;
    row.seed = seed;
    row.evaluations = o.evaluations;
    row.wall_time = o.wall_seconds;
    for (const auto& t : rep.trials)
        if (t.dataset == ds.id) row.trials.push_back(t);
    if (o.best) {
        row.expression = simplify(*o.best);
        row.r2_train = r_squared(*row.expression, *roster.front().data);
        row.r2_test = r_squared(*row.expression, test);
        row.size = row.expression->size();
    } else {
        row.r2_train = row.r2_test = -std::numeric_limits<double>::infinity();
    }
    row.solved = row.r2_train >= cfg.solve_threshold;
    return row;
}

// -- aggregation -----------------------------------------------------------------

namespace {

double clamp_r2(double r) { return std::isnan(r) ? -1.0 : std::clamp(r, -1.0, 1.0); }

} // namespace

std::vector<DatasetAggregate> per_dataset_means(const std::vector<BenchRow>& rows)
{
    std::vector<DatasetAggregate> out;
    std::map<std::string, std::size_t> where;
    std::vector<std::size_t> counts;
    for (const auto& r : rows) {
        auto [it, fresh] = where.emplace(r.dataset, out.size());
        if (fresh) {
            out.push_back({r.dataset});
            counts.push_back(0);
        }
        auto& a = out[it->second];
        ++counts[it->second];
        a.r2_train += clamp_r2(r.r2_train);
        a.r2_test += clamp_r2(r.r2_test);
        a.size += static_cast<double>(r.size);
        a.solve_rate += r.solved ? 1.0 : 0.0;
        a.evaluations += static_cast<double>(r.evaluations);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = static_cast<double>(counts[i]);
        out[i].r2_train /= n;
        out[i].r2_test /= n;
        out[i].size /= n;
        out[i].solve_rate /= n;
        out[i].evaluations /= n;
    }
    return out;
}

SuiteAggregate aggregate_suite(const std::vector<DatasetAggregate>& per, Aggregate how)
{
    auto col = [&](auto field) {
        std::vector<double> v;
        for (const auto& a : per) v.push_back(a.*field);
        return aggregate(std::move(v), how);
    };
    SuiteAggregate s;
    s.r2_train = col(&DatasetAggregate::r2_train);
    s.r2_test = col(&DatasetAggregate::r2_test);
    s.size = col(&DatasetAggregate::size);
    s.evaluations = col(&DatasetAggregate::evaluations);
    // the solve rate is a fraction of datasets, so it is always a mean
    s.solve_rate = aggregate([&] {
        std::vector<double> v;
        for (const auto& a : per) v.push_back(a.solve_rate);
        return v;
    }(), Aggregate::mean);
    return s;
}

// -- CSV -------------------------------------------------------------------------

void write_summary_csv(const std::vector<BenchRow>& rows, bool with_wall_time, std::ostream& out)
{
    out << "dataset,seed,r2_train,r2_test,size,solved,evaluations,wall_time\n";
    for (const auto& r : rows)
        out << r.dataset << ',' << r.seed << ',' << format_real(r.r2_train) << ',' << format_real(r.r2_test) << ','
            << r.size << ',' << (r.solved ? 1 : 0) << ',' << r.evaluations << ','
            << format_real(with_wall_time ? r.wall_time : 0.0) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

double parse_real(const std::string& s, std::size_t line)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

} // namespace

std::vector<LabeledMetrics> read_metrics_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("metrics CSV is empty");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("metrics CSV lacks a '" + name + "' column");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cl = column("label"), ca = column("accuracy"), cs = column("size");
    std::vector<LabeledMetrics> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() < header.size())
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                     " fields");
        out.push_back({cells[cl], parse_real(cells[ca], lineno), parse_real(cells[cs], lineno)});
    }
    return out;
}

void write_pareto_csv(const std::vector<LabeledMetrics>& points, std::ostream& out)
{
    std::vector<ParetoPoint> pp;
    for (const auto& p : points) {
        const double acc = std::isnan(p.accuracy) ? -std::numeric_limits<double>::max()
                                                  : std::clamp(p.accuracy, -std::numeric_limits<double>::max(),
                                                               std::numeric_limits<double>::max());
        pp.push_back({p.label, -acc, p.size});
    }
    const auto ranks = pareto_ranks(pp);
    out << "label,accuracy,size,rank\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        out << points[i].label << ',' << format_real(points[i].accuracy) << ',' << format_real(points[i].size) << ','
            << ranks[i] << '\n';
}

// -- suite -----------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

} // namespace

BenchReport run_benchmark(const std::filesystem::path& suite, const BenchConfig& cfg, const ModelSnapshot& initial,
                          const std::filesystem::path& out, const std::vector<MutationEntry>& corpus, std::ostream* log)
{
    if (cfg.seeds.empty()) throw std::invalid_argument("bench needs at least one seed");
    cfg.campaign.check();
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(suite)) {
        for (const auto& e : std::filesystem::directory_iterator(suite))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    } else if (std::filesystem::is_regular_file(suite)) {
        files.push_back(suite);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no CSV datasets in " + suite.string());
    std::filesystem::create_directories(out);

    BenchReport rep;
    std::vector<std::shared_ptr<const Dataset>> datasets;
    for (const auto& f : files) {
        try {
            auto ds = read_csv(f, f.stem().string());
            split_indices(ds.rows(), 0); // too-small datasets are rejected up front
            datasets.push_back(std::make_shared<const Dataset>(std::move(ds)));
        } catch (const std::exception& e) {
            rep.skipped.push_back({f.stem().string(), e.what()});
            if (log) *log << "skipping " << f.string() << ": " << e.what() << '\n';
        }
    }

    struct Slot {
        std::optional<BenchRow> row;
        std::string error;
    };
    const std::size_t n_jobs = datasets.size() * cfg.seeds.size();
    std::vector<Slot> slots(n_jobs);
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t j;
            {
                std::lock_guard lk(mu);
                if (next == n_jobs) return;
                j = next++;
            }
            const auto& ds = *datasets[j / cfg.seeds.size()];
            const auto seed = cfg.seeds[j % cfg.seeds.size()];
            try {
                slots[j].row = run_one(ds, seed, cfg, initial, corpus);
            } catch (const std::exception& e) {
                slots[j].error = e.what();
            }
            if (log) {
                std::lock_guard lk(mu);
                *log << ds.id << " seed " << seed << ": "
                     << (slots[j].row ? (slots[j].row->solved ? "solved" : "unsolved") : "error: " + slots[j].error)
                     << '\n';
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.jobs, n_jobs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t j = 0; j < n_jobs; ++j) {
        if (slots[j].row)
            rep.rows.push_back(std::move(*slots[j].row));
        else
            rep.skipped.push_back({datasets[j / cfg.seeds.size()]->id + ":" + std::to_string(cfg.seeds[j % cfg.seeds.size()]),
                                   slots[j].error});
    }
    rep.per_dataset = per_dataset_means(rep.rows);
    rep.suite = aggregate_suite(rep.per_dataset, cfg.aggregate);

    const bool reproducible = threads == 1 && cfg.campaign.workers <= 1;
    {
        auto f = open_out(out / "summary.csv");
        write_summary_csv(rep.rows, !reproducible, f);
    }
    {
        auto f = open_out(out / "timings.csv");
        f << "dataset,seed,wall_time\n";
        for (const auto& r : rep.rows) f << r.dataset << ',' << r.seed << ',' << format_real(r.wall_time) << '\n';
    }
    {
        auto f = open_out(out / "aggregate.csv");
        f << "dataset,r2_train,r2_test,size,solve_rate,evaluations\n";
        for (const auto& a : rep.per_dataset)
            f << a.dataset << ',' << format_real(a.r2_train) << ',' << format_real(a.r2_test) << ','
              << format_real(a.size) << ',' << format_real(a.solve_rate) << ',' << format_real(a.evaluations) << '\n';
        f << '<' << to_string(cfg.aggregate) << ">," << format_real(rep.suite.r2_train) << ','
          << format_real(rep.suite.r2_test) << ',' << format_real(rep.suite.size) << ','
          << format_real(rep.suite.solve_rate) << ',' << format_real(rep.suite.evaluations) << '\n';
    }
    {
        auto f = open_out(out / "curves.jsonl");
        for (const auto& r : rep.rows)
            for (const auto& t : r.trials) {
                nlohmann::json pts = nlohmann::json::array();
                for (const auto& p : t.curve) pts.push_back({p.evaluations, format_real(p.best_r2)});
                f << nlohmann::json{{"dataset", r.dataset}, {"seed", r.seed}, {"trial", t.trial},
                                    {"solved", t.solved}, {"points", pts}}
                         .dump()
                  << '\n';
            }
    }
    {
        std::vector<LabeledMetrics> pts;
        for (const auto& r : rep.rows)
            pts.push_back({r.dataset + ":" + std::to_string(r.seed), r.r2_test, static_cast<double>(r.size)});
        auto f = open_out(out / "pareto.csv");
        write_pareto_csv(pts, f);
    }
    {
        auto f = open_out(out / "expressions.csv");
        f << "dataset,seed,expression\n";
        for (const auto& r : rep.rows) {
            f << r.dataset << ',' << r.seed << ',';
            if (r.expression) {
                const auto toks = to_prefix(*r.expression);
                for (std::size_t i = 0; i < toks.size(); ++i) f << (i ? " " : "") << toks[i];
            }
            f << '\n';
        }
    }
    {
        auto f = open_out(out / "skipped.csv");
        f << "dataset,reason\n";
        for (const auto& s : rep.skipped) {
            std::string reason = s.reason;
            std::replace(reason.begin(), reason.end(), ',', ';');
            std::replace(reason.begin(), reason.end(), '\n', ' ');
            f << s.dataset << ',' << reason << '\n';
        }
    }
    return rep;
}

} // namespace srmcts
