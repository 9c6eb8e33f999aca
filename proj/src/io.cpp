#include "firefilter/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace firefilter {

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading file: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing file: " + path);
}

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* k) { return it.key() == k; });
        if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

double get_number(const json& obj, const std::string& where, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key, int dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return v.get<bool>();
}

Vec2 get_vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(where + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<Polygon> parse_polygons(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError(where + ": expected an array of polygons");
    std::vector<Polygon> polys;
    for (std::size_t p = 0; p < arr.size(); ++p) {
        const json& jp = arr[p];
        const std::string pwhere = where + "[" + std::to_string(p) + "]";
        if (!jp.is_array()) throw ConfigError(pwhere + ": expected an array of vertices");
        if (jp.size() < 3) throw ConfigError(pwhere + ": polygon needs at least 3 vertices");
        Polygon poly;
        poly.reserve(jp.size());
        for (std::size_t v = 0; v < jp.size(); ++v) {
            const Vec2 pt = get_vec2(jp[v], pwhere + "[" + std::to_string(v) + "]");
            if (!std::isfinite(pt[0]) || !std::isfinite(pt[1]))
                throw ConfigError(pwhere + ": vertex coordinates must be finite");
            poly.push_back(pt);
        }
        polys.push_back(std::move(poly));
    }
    return polys;
}

json polygons_to_json(const std::vector<Polygon>& polys) {
    json arr = json::array();
    for (const Polygon& poly : polys) {
        json jp = json::array();
        for (const Vec2& v : poly) jp.push_back(json::array({v[0], v[1]}));
        arr.push_back(std::move(jp));
    }
    return arr;
}

Grid parse_grid(const json& jg) {
    expect_keys(jg, "grid", {"nx", "ny", "dx", "dy", "origin"});
    const int nx = get_int(jg, "grid", "nx", 200);
    const int ny = get_int(jg, "grid", "ny", 200);
    const double dx = get_number(jg, "grid", "dx", 0.5);
    const double dy = get_number(jg, "grid", "dy", 0.5);
    Vec2 origin{0.0, 0.0};
    if (jg.contains("origin")) origin = get_vec2(jg.at("origin"), "grid.origin");
    // Grid's own ConfigError already carries the "grid:" context.
    return Grid(nx, ny, dx, dy, origin);
}

Ignition parse_ignition(const json& ji) {
    expect_keys(ji, "ignition", {"circle", "polygons"});
    if (ji.contains("circle") == ji.contains("polygons"))
        throw ConfigError("ignition: provide exactly one of 'circle' or 'polygons'");
    Ignition ignition;
    if (ji.contains("circle")) {
        const json& jc = ji.at("circle");
        expect_keys(jc, "ignition.circle", {"center", "radius"});
        CircleSpec spec;
        if (!jc.contains("center") || !jc.contains("radius"))
            throw ConfigError("ignition.circle: center and radius are required");
        spec.center = get_vec2(jc.at("center"), "ignition.circle.center");
        spec.radius = get_number(jc, "ignition.circle", "radius", 0.0);
        if (!(spec.radius > 0.0)) throw ConfigError("ignition.circle.radius: must be > 0");
        ignition.shape = spec;
    } else {
        ignition.shape = parse_polygons(ji.at("polygons"), "ignition.polygons");
    }
    return ignition;
}

double parse_double_field(const std::string& field, const std::string& where) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(where + ": cannot parse number '" + field + "'");
    if (!std::isfinite(value)) throw ConfigError(where + ": value must be finite");
    return value;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(strip(line.substr(start)));
            break;
        }
        fields.push_back(strip(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    expect_keys(root, "config",
                {"grid", "ignition", "params", "prior", "solver", "filter", "synth", "seed",
                 "t_end", "obs_interval"});

    RunConfig config;
    if (root.contains("grid")) config.grid = parse_grid(root.at("grid"));
    if (root.contains("ignition")) config.ignition = parse_ignition(root.at("ignition"));

    if (root.contains("params")) {
        const json& jp = root.at("params");
        expect_keys(jp, "params", {"beta", "gamma"});
        RosParams params;
        params.beta = get_number(jp, "params", "beta", 0.0);
        params.gamma = get_number(jp, "params", "gamma", 0.0);
        if (!(params.beta >= 0.0)) throw ConfigError("params.beta: must be >= 0");
        config.params = params;
    }
    if (root.contains("prior")) {
        const json& jp = root.at("prior");
        expect_keys(jp, "prior", {"mu_beta", "sigma_beta", "mu_gamma", "sigma_gamma"});
        RosPrior prior;
        prior.mu_beta = get_number(jp, "prior", "mu_beta", 0.0);
        prior.sigma_beta = get_number(jp, "prior", "sigma_beta", 0.0);
        prior.mu_gamma = get_number(jp, "prior", "mu_gamma", 0.0);
        prior.sigma_gamma = get_number(jp, "prior", "sigma_gamma", 0.0);
        try {
            validate_prior(prior);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("prior: ") + e.what());
        }
        config.prior = prior;
    }
    if (root.contains("solver")) {
        const json& js = root.at("solver");
        expect_keys(js, "solver",
                    {"cfl", "eno_order", "reinit_every", "reinit_iterations", "noise_sigma",
                     "boundary", "clamp_upwind"});
        config.solver.cfl = get_number(js, "solver", "cfl", config.solver.cfl);
        config.solver.eno_order = get_int(js, "solver", "eno_order", config.solver.eno_order);
        config.solver.reinit_every =
            get_int(js, "solver", "reinit_every", config.solver.reinit_every);
        config.solver.reinit_iterations =
            get_int(js, "solver", "reinit_iterations", config.solver.reinit_iterations);
        config.solver.noise_sigma =
            get_number(js, "solver", "noise_sigma", config.solver.noise_sigma);
        config.solver.clamp_upwind =
            get_bool(js, "solver", "clamp_upwind", config.solver.clamp_upwind);
        if (js.contains("boundary")) {
            const json& jb = js.at("boundary");
            if (!jb.is_string() || jb.get<std::string>() != "extrapolate")
                throw ConfigError("solver.boundary: only 'extrapolate' is supported");
        }
    }
    if (root.contains("filter")) {
        const json& jf = root.at("filter");
        expect_keys(jf, "filter",
                    {"n_particles", "n_members", "sigma_blur", "resample_always", "q_beta",
                     "q_gamma", "r_scale", "downsample", "member_contours"});
        FilterConfig& f = config.filter;
        f.n_particles = get_int(jf, "filter", "n_particles", f.n_particles);
        f.n_members = get_int(jf, "filter", "n_members", f.n_members);
        f.sigma_blur = get_number(jf, "filter", "sigma_blur", f.sigma_blur);
        f.resample_always = get_bool(jf, "filter", "resample_always", f.resample_always);
        f.q_beta = get_number(jf, "filter", "q_beta", f.q_beta);
        f.q_gamma = get_number(jf, "filter", "q_gamma", f.q_gamma);
        f.r_scale = get_number(jf, "filter", "r_scale", f.r_scale);
        f.downsample = get_int(jf, "filter", "downsample", f.downsample);
        f.member_contours = get_int(jf, "filter", "member_contours", f.member_contours);
    }
    if (root.contains("synth")) {
        const json& js = root.at("synth");
        expect_keys(js, "synth",
                    {"wind_speed", "wind_dir_deg", "gust_amplitude", "gust_period_s",
                     "obs_jitter"});
        SynthConfig& s = config.synth;
        s.wind_speed = get_number(js, "synth", "wind_speed", s.wind_speed);
        s.wind_dir_deg = get_number(js, "synth", "wind_dir_deg", s.wind_dir_deg);
        s.gust_amplitude = get_number(js, "synth", "gust_amplitude", s.gust_amplitude);
        s.gust_period_s = get_number(js, "synth", "gust_period_s", s.gust_period_s);
        s.obs_jitter = get_number(js, "synth", "obs_jitter", s.obs_jitter);
        if (!std::isfinite(s.wind_speed) || !std::isfinite(s.wind_dir_deg))
            throw ConfigError("synth: wind_speed and wind_dir_deg must be finite");
        if (s.gust_amplitude != 0.0 && !(s.gust_period_s > 0.0))
            throw ConfigError("synth.gust_period_s: must be > 0 when gust_amplitude is set");
        if (!(s.obs_jitter >= 0.0)) throw ConfigError("synth.obs_jitter: must be >= 0");
    }
    if (root.contains("seed")) {
        const json& js = root.at("seed");
        const bool ok = js.is_number_unsigned() ||
                        (js.is_number_integer() && js.get<std::int64_t>() >= 0);
        if (!ok) throw ConfigError("seed: expected a nonnegative integer");
        config.seed = js.get<std::uint64_t>();
    }
    config.t_end = get_number(root, "config", "t_end", config.t_end);
    config.obs_interval = get_number(root, "config", "obs_interval", config.obs_interval);
    if (!(config.obs_interval > 0.0)) throw ConfigError("obs_interval: must be > 0");
    if (!(config.t_end >= 0.0)) throw ConfigError("t_end: must be >= 0");

    validate_solver_config(config.solver);
    validate_filter_config(config.filter);
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

std::string run_config_to_json(const RunConfig& config) {
    json root;
    root["grid"] = {{"nx", config.grid.nx()},
                    {"ny", config.grid.ny()},
                    {"dx", config.grid.dx()},
                    {"dy", config.grid.dy()},
                    {"origin", json::array({config.grid.origin()[0], config.grid.origin()[1]})}};
    if (const auto* circle = std::get_if<CircleSpec>(&config.ignition.shape)) {
        root["ignition"] = {{"circle",
                             {{"center", json::array({circle->center[0], circle->center[1]})},
                              {"radius", circle->radius}}}};
    } else {
        root["ignition"] = {
            {"polygons", polygons_to_json(std::get<std::vector<Polygon>>(config.ignition.shape))}};
    }
    if (config.params)
        root["params"] = {{"beta", config.params->beta}, {"gamma", config.params->gamma}};
    if (config.prior)
        root["prior"] = {{"mu_beta", config.prior->mu_beta},
                         {"sigma_beta", config.prior->sigma_beta},
                         {"mu_gamma", config.prior->mu_gamma},
                         {"sigma_gamma", config.prior->sigma_gamma}};
    root["solver"] = {{"cfl", config.solver.cfl},
                      {"eno_order", config.solver.eno_order},
                      {"reinit_every", config.solver.reinit_every},
                      {"reinit_iterations", config.solver.reinit_iterations},
                      {"noise_sigma", config.solver.noise_sigma},
                      {"boundary", "extrapolate"},
                      {"clamp_upwind", config.solver.clamp_upwind}};
    root["filter"] = {{"n_particles", config.filter.n_particles},
                      {"n_members", config.filter.n_members},
                      {"sigma_blur", config.filter.sigma_blur},
                      {"resample_always", config.filter.resample_always},
                      {"q_beta", config.filter.q_beta},
                      {"q_gamma", config.filter.q_gamma},
                      {"r_scale", config.filter.r_scale},
                      {"downsample", config.filter.downsample},
                      {"member_contours", config.filter.member_contours}};
    root["synth"] = {{"wind_speed", config.synth.wind_speed},
                     {"wind_dir_deg", config.synth.wind_dir_deg},
                     {"gust_amplitude", config.synth.gust_amplitude},
                     {"gust_period_s", config.synth.gust_period_s},
                     {"obs_jitter", config.synth.obs_jitter}};
    root["seed"] = config.seed;
    root["t_end"] = config.t_end;
    root["obs_interval"] = config.obs_interval;
    return root.dump(2) + "\n";
}

WindSeries load_wind_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("wind csv: empty file: " + path);

    const std::vector<std::string> header = split_csv_row(line);
    bool bearing_form;
    if (header == std::vector<std::string>{"time_s", "wx_mps", "wy_mps"}) {
        bearing_form = false;
    } else if (header == std::vector<std::string>{"time_s", "speed_mps", "dir_deg"}) {
        bearing_form = true;
    } else {
        throw ConfigError(
            "wind csv: header must be 'time_s,wx_mps,wy_mps' or 'time_s,speed_mps,dir_deg'");
    }

    WindSeries series;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        const std::string where = "wind csv row " + std::to_string(line_no);
        const std::vector<std::string> fields = split_csv_row(line);
        if (fields.size() != 3) throw ConfigError(where + ": expected 3 columns");
        WindSample sample;
        sample.time = parse_double_field(fields[0], where + " (time_s)");
        if (bearing_form) {
            const double speed = parse_double_field(fields[1], where + " (speed_mps)");
            const double dir = parse_double_field(fields[2], where + " (dir_deg)") * kPi / 180.0;
            sample.wx = speed * std::cos(dir);
            sample.wy = speed * std::sin(dir);
        } else {
            sample.wx = parse_double_field(fields[1], where + " (wx_mps)");
            sample.wy = parse_double_field(fields[2], where + " (wy_mps)");
        }
        if (!series.samples.empty() && !(sample.time > series.samples.back().time))
            throw ConfigError(where + ": time must be strictly increasing");
        series.samples.push_back(sample);
    }
    validate_wind_series(series);
    return series;
}

void write_wind_csv(const WindSeries& series, const std::string& path) {
    validate_wind_series(series);
    std::string text = "time_s,wx_mps,wy_mps\n";
    for (const WindSample& s : series.samples) {
        text += format_double(s.time);
        text += ',';
        text += format_double(s.wx);
        text += ',';
        text += format_double(s.wy);
        text += '\n';
    }
    write_text_file(path, text);
}

namespace {

std::vector<FrontRecord> parse_front_records(const std::string& text, const std::string& path) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("fronts json (" + path + "): invalid JSON: " + e.what());
    }
    if (!root.is_array()) throw ConfigError("fronts json (" + path + "): expected a JSON array");

    std::vector<FrontRecord> records;
    for (std::size_t k = 0; k < root.size(); ++k) {
        const std::string where = "fronts json record " + std::to_string(k);
        const json& jr = root[k];
        expect_keys(jr, where, {"time_s", "polygons", "tag"});
        if (!jr.contains("time_s") || !jr.at("time_s").is_number())
            throw ConfigError(where + ": 'time_s' number is required");
        if (!jr.contains("polygons"))
            throw ConfigError(where + ": 'polygons' array is required");
        FrontRecord record;
        record.time = jr.at("time_s").get<double>();
        if (!std::isfinite(record.time)) throw ConfigError(where + ": time_s must be finite");
        record.polygons = parse_polygons(jr.at("polygons"), where + ".polygons");
        if (jr.contains("tag")) {
            if (!jr.at("tag").is_string()) throw ConfigError(where + ": 'tag' must be a string");
            record.tag = jr.at("tag").get<std::string>();
        }
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace

std::vector<FrontRecord> load_front_records(const std::string& path) {
    return parse_front_records(read_text_file(path), path);
}

std::vector<Observation> load_fronts_json(const std::string& path) {
    const std::vector<FrontRecord> records = load_front_records(path);
    std::vector<Observation> observations;
    observations.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (k > 0 && !(records[k].time > records[k - 1].time))
            throw ConfigError("fronts json record " + std::to_string(k) +
                              ": times must be strictly increasing");
        Observation obs;
        obs.time = records[k].time;
        obs.front.time = records[k].time;
        obs.front.polylines = records[k].polygons;
        observations.push_back(std::move(obs));
    }
    return observations;
}

void write_fronts_json(const std::vector<FrontRecord>& records, const std::string& path) {
    json root = json::array();
    for (const FrontRecord& r : records) {
        root.push_back({{"time_s", r.time}, {"polygons", polygons_to_json(r.polygons)},
                        {"tag", r.tag}});
    }
    write_text_file(path, root.dump(2) + "\n");
}

std::pair<std::vector<Observation>, WindSeries> generate_synthetic(const RunConfig& config,
                                                                   const RosParams& true_params,
                                                                   RngStream& rng,
                                                                   PropagateStats* stats) {
    if (!(config.obs_interval > 0.0)) throw ConfigError("generate_synthetic: obs_interval must be > 0");
    if (!(config.t_end >= 0.0)) throw ConfigError("generate_synthetic: t_end must be >= 0");

    WindSeries wind;
    const double dir = config.synth.wind_dir_deg * kPi / 180.0;
    const long last_second = static_cast<long>(std::floor(config.t_end + 1e-9));
    for (long t = 0; t <= last_second; ++t) {
        double speed = config.synth.wind_speed;
        if (config.synth.gust_amplitude != 0.0)
            speed += config.synth.gust_amplitude *
                     std::sin(2.0 * kPi * static_cast<double>(t) / config.synth.gust_period_s);
        wind.samples.push_back({static_cast<double>(t), speed * std::cos(dir),
                                speed * std::sin(dir)});
    }

    LevelSetField phi = config.ignition.signed_distance(config.grid);
    std::vector<Observation> observations;
    long k = 1;
    while (k * config.obs_interval <= config.t_end + 1e-9) {
        const double t_obs = k * config.obs_interval;
        try {
            PropagateStats leg;
            phi = propagate(phi, t_obs, true_params, wind, config.solver, rng, &leg);
            if (stats) {
                stats->steps += leg.steps;
                stats->reinits += leg.reinits;
            }
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) +
                               "; enlarge the grid or shorten t_end for the synthetic scenario");
        }
        FrontContour contour = extract_contour(phi);
        if (config.synth.obs_jitter > 0.0) {
            // Displace each vertex along its outward normal; a single draw per
            // vertex keeps the mean displacement at sigma*sqrt(2/pi).
            for (Polygon& poly : contour.polylines) {
                const std::size_t n = poly.size();
                Polygon jittered = poly;
                for (std::size_t v = 0; v < n; ++v) {
                    const Vec2& prev = poly[(v + n - 1) % n];
                    const Vec2& next = poly[(v + 1) % n];
                    const double tx = next[0] - prev[0], ty = next[1] - prev[1];
                    const double len = std::hypot(tx, ty);
                    const double eta = rng.normal(0.0, config.synth.obs_jitter);
                    if (len < 1e-12) continue;
                    jittered[v][0] += eta * (ty / len);
                    jittered[v][1] += eta * (-tx / len);
                }
                poly = std::move(jittered);
            }
        }
        Observation obs;
        obs.time = t_obs;
        obs.front = std::move(contour);
        obs.front.time = t_obs;
        observations.push_back(std::move(obs));
        ++k;
    }
    return {std::move(observations), std::move(wind)};
}

}  // namespace firefilter
