// Command-line interface: mesh generation, moment tables, Poisson solves,
// eigenproblems, and the study harness. Exit codes: 0 success, 1 usage or
// I/O error, 2 numerical failure, 3 mesh validation failure.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "snowdg/assembly.hpp"
#include "snowdg/mesh_io.hpp"
#include "snowdg/solvers.hpp"
#include "snowdg/studies.hpp"

namespace {

using namespace snowdg;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitMesh = 3;

struct RhsSpec {
    std::string text = "constant:1";
    std::function<double(geom::Vec2)> f;
};

RhsSpec parse_rhs(const std::string& s) {
    RhsSpec spec;
    spec.text = s;
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    if (kind == "constant") {
        const double c = colon == std::string::npos ? 1.0 : std::stod(s.substr(colon + 1));
        spec.f = [c](geom::Vec2) { return c; };
    } else if (kind == "gaussian") {
        double sigma = 0.1;
        if (colon != std::string::npos) {
            const std::string rest = s.substr(colon + 1);
            const auto eq = rest.find('=');
            sigma = std::stod(eq == std::string::npos ? rest : rest.substr(eq + 1));
        }
        spec.f = studies::gaussian_problem(sigma).f;
    } else {
        throw CLI::ValidationError("--rhs", "expected constant:<c> or gaussian:sigma=<s>");
    }
    return spec;
}

mesh::Family parse_family(const std::string& s) {
    if (s == "uniform") return mesh::Family::uniform;
    if (s == "quasi") return mesh::Family::quasi_uniform;
    if (s == "boundary") return mesh::Family::boundary_refined;
    throw CLI::ValidationError("--family", "expected uniform, quasi or boundary");
}

mesh::Mesh build_mesh(mesh::Family fam, int ell, int ellstar) {
    switch (fam) {
        case mesh::Family::uniform: return mesh::build_uniform(ell);
        case mesh::Family::quasi_uniform: return mesh::build_quasi_uniform(ell);
        case mesh::Family::boundary_refined: return mesh::build_boundary_refined(ell, ellstar);
    }
    throw std::logic_error("unreachable");
}

mesh::Mesh build_checked(mesh::Family fam, int ell, int ellstar) {
    mesh::Mesh m = build_mesh(fam, ell, ellstar);
    const auto rep = mesh::lqu_check(m);
    if (!rep.pass) {
        std::cerr << "mesh validation failed:\n";
        for (const auto& issue : rep.issues) std::cerr << "  " << issue << "\n";
        throw mesh_error("LQU check failed");
    }
    return m;
}

void write_or_print(const std::vector<studies::StudyRow>& rows, const std::string& out) {
    if (out.empty()) {
        studies::write_csv(rows, std::cout);
        return;
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open output file: " + out);
    studies::write_csv(rows, os);
}

void moments_csv(const std::string& region, int max_deg, std::ostream& out) {
    char buf[40];
    auto emit = [&](const moments::MomentTable& t) {
        for (int d = 0; d <= t.max_deg; ++d)
            for (int b = 0; b <= d; ++b) {
                std::snprintf(buf, sizeof buf, "%.17g", t.value(d - b, b));
                out << t.region << ',' << (d - b) << ',' << b << ',' << buf << '\n';
            }
    };
    out << "region,a,b,value\n";
    if (region == "snowflake") {
        emit(moments::snowflake_moments(max_deg));
    } else if (region == "koch") {
        emit(moments::koch_moments(max_deg));
    } else if (region == "wedge") {
        if (max_deg > 2) throw CLI::ValidationError("--max-deg", "wedge tables stop at degree 2");
        for (int i = 1; i <= 6; ++i) {
            auto t = moments::wedge_moments(i);
            t.max_deg = std::min(t.max_deg, max_deg);
            emit(t);
        }
    } else if (region == "triangle") {
        if (max_deg > 2) throw CLI::ValidationError("--max-deg", "triangle table stops at degree 2");
        auto t = moments::triangle_moments();
        t.max_deg = std::min(t.max_deg, max_deg);
        emit(t);
    } else {
        throw CLI::ValidationError("--region", "expected snowflake, koch, wedge or triangle");
    }
}

int run(int argc, char** argv) {
    CLI::App app{"SIP-DG solver for the Poisson problem on the Koch snowflake"};
    app.require_subcommand(1);

    std::string family_str = "quasi";
    int ell = 3, ellstar = 0, p = 1, k = 10, quad_level = 4, max_deg = 4, ell_max = 6, ellstar_max = 3;
    int polygons = -1;
    double eta = 10.0, sigma = 0.1, tol = 1e-10, eig_tol = 1e-8;
    std::string out, rhs_str = "constant:1", region = "snowflake", polygons_out;

    auto add_mesh_opts = [&](CLI::App* cmd) {
        cmd->add_option("--family", family_str, "mesh family: uniform, quasi, boundary")->capture_default_str();
        cmd->add_option("--ell", ell, "refinement level l")->capture_default_str();
        cmd->add_option("--ellstar", ellstar, "boundary refinement level l* (boundary family)")->capture_default_str();
    };

    auto* cmd_mesh = app.add_subcommand("mesh", "build a mesh and write it to a file");
    add_mesh_opts(cmd_mesh);
    cmd_mesh->add_option("--out", out, "output mesh file (JSON)")->required();
    cmd_mesh->add_option("--polygons", polygons, "also write prefractal element outlines at this depth");
    cmd_mesh->add_option("--polygons-out", polygons_out, "outline file (default: <out>.polygons.txt)");

    auto* cmd_moments = app.add_subcommand("moments", "print exact moment tables as CSV");
    cmd_moments->add_option("--region", region, "snowflake, koch, wedge or triangle")->capture_default_str();
    cmd_moments->add_option("--max-deg", max_deg, "maximum total degree")->capture_default_str();
    cmd_moments->add_option("--out", out, "output file (default: stdout)");

    auto* cmd_solve = app.add_subcommand("solve", "solve the Poisson problem and write the solution");
    add_mesh_opts(cmd_solve);
    cmd_solve->add_option("--p", p, "polynomial degree (1 or 2)")->capture_default_str();
    cmd_solve->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    cmd_solve->add_option("--rhs", rhs_str, "right-hand side: constant:<c> or gaussian:sigma=<s>")->capture_default_str();
    cmd_solve->add_option("--quad-level", quad_level, "composite barycentre level for the load vector")->capture_default_str();
    cmd_solve->add_option("--tol", tol, "CG relative tolerance")->capture_default_str();
    cmd_solve->add_option("--out", out, "solution file (JSON)")->required();

    auto* cmd_eigs = app.add_subcommand("eigs", "smallest Dirichlet eigenvalues");
    add_mesh_opts(cmd_eigs);
    cmd_eigs->add_option("--p", p, "polynomial degree (1 or 2)")->capture_default_str();
    cmd_eigs->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    cmd_eigs->add_option("--k", k, "number of eigenvalues")->capture_default_str();
    cmd_eigs->add_option("--tol", eig_tol, "eigensolver relative residual tolerance")->capture_default_str();
    cmd_eigs->add_option("--out", out, "output CSV (default: stdout)");

    auto* cmd_study = app.add_subcommand("study", "reproducible experiments");
    cmd_study->require_subcommand(1);

    auto* st_conv = cmd_study->add_subcommand("convergence", "smooth h-convergence study");
    st_conv->add_option("--sigma", sigma, "gaussian width")->capture_default_str();
    st_conv->add_option("--p", p, "polynomial degree")->capture_default_str();
    st_conv->add_option("--ell-max", ell_max, "finest quasi-uniform level")->capture_default_str();
    st_conv->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    st_conv->add_option("--quad-level", quad_level, "quadrature level")->capture_default_str();
    st_conv->add_option("--out", out, "output CSV (default: stdout)");

    auto* st_inc = cmd_study->add_subcommand("increments", "increment decay for f = 1");
    st_inc->add_option("--family", family_str, "quasi or boundary")->capture_default_str();
    st_inc->add_option("--p", p, "polynomial degree")->capture_default_str();
    st_inc->add_option("--ell-max", ell_max, "finest level (quasi family)")->capture_default_str();
    st_inc->add_option("--ell", ell, "base level (boundary family)")->capture_default_str();
    st_inc->add_option("--ellstar-max", ellstar_max, "finest boundary level (boundary family)")->capture_default_str();
    st_inc->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    st_inc->add_option("--out", out, "output CSV (default: stdout)");

    auto* st_cond = cmd_study->add_subcommand("conditioning", "condition number growth");
    st_cond->add_option("--p", p, "polynomial degree")->capture_default_str();
    st_cond->add_option("--ell-max", ell_max, "finest quasi-uniform level")->capture_default_str();
    st_cond->add_option("--ellstar-max", ellstar_max, "finest boundary level")->capture_default_str();
    st_cond->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    st_cond->add_option("--out", out, "output CSV (default: stdout)");

    auto* st_eigs = cmd_study->add_subcommand("eigs", "eigenvalue comparison against references");
    st_eigs->add_option("--family", family_str, "mesh family")->capture_default_str();
    st_eigs->add_option("--ell", ell, "refinement level")->capture_default_str();
    st_eigs->add_option("--ellstar", ellstar, "boundary refinement level")->capture_default_str();
    st_eigs->add_option("--p", p, "polynomial degree")->capture_default_str();
    st_eigs->add_option("--k", k, "number of eigenvalues")->capture_default_str();
    st_eigs->add_option("--eta", eta, "penalty parameter")->capture_default_str();
    st_eigs->add_option("--out", out, "output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the message or the help text
        return code == 0 ? 0 : kExitUsage;
    }

    if (cmd_mesh->parsed()) {
        const mesh::Mesh m = build_checked(parse_family(family_str), ell, ellstar);
        mesh::export_mesh(m, out);
        if (polygons >= 0)
            mesh::export_polygons(m, polygons, polygons_out.empty() ? out + ".polygons.txt" : polygons_out);
        std::cout << "wrote " << m.elements.size() << " elements, " << m.faces.size() << " faces to " << out << "\n";
        return 0;
    }

    if (cmd_moments->parsed()) {
        if (out.empty()) {
            moments_csv(region, max_deg, std::cout);
        } else {
            std::ofstream os(out);
            if (!os) throw std::runtime_error("cannot open output file: " + out);
            moments_csv(region, max_deg, os);
        }
        return 0;
    }

    if (cmd_solve->parsed()) {
        const RhsSpec rhs = parse_rhs(rhs_str);
        const mesh::Mesh m = build_checked(parse_family(family_str), ell, ellstar);
        assembly::DGSpace sp(m, p);
        assembly::Assembler as(sp);
        auto [A, b] = as.assemble_system(eta, rhs.f, quad_level);
        if (A.rows() <= 3000) {
            // small systems get a definite answer on definiteness up front
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(la::to_dense(A));
            if (es.eigenvalues().minCoeff() <= 0.0)
                throw numerical_error("system matrix is not positive definite (eta too small?)");
        }
        auto [x, rep] = la::solve_spd(A, b, tol);

        nlohmann::json j;
        j["format"] = "snowdg-solution";
        j["p"] = p;
        j["basis"] = "monomial-graded-lex";
        j["eta"] = eta;
        j["rhs"] = rhs.text;
        j["quad_level"] = quad_level;
        j["mesh"] = {{"family", mesh::family_name(m.family)}, {"ell", m.ell}, {"ellstar", m.ellstar}};
        j["solver"] = {{"iterations", rep.iterations}, {"rel_residual", rep.rel_residual}};
        nlohmann::json coeffs = nlohmann::json::array();
        for (int e = 0; e < sp.n_elements(); ++e) {
            nlohmann::json block = nlohmann::json::array();
            for (int i = 0; i < sp.np; ++i) block.push_back(x[static_cast<std::size_t>(e * sp.np + i)]);
            coeffs.push_back(std::move(block));
        }
        j["coefficients"] = std::move(coeffs);
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot open output file: " + out);
        os << j.dump(1) << "\n";
        std::cout << "solved " << A.rows() << " unknowns in " << rep.iterations
                  << " CG iterations (residual " << rep.rel_residual << ")\n";
        return 0;
    }

    if (cmd_eigs->parsed()) {
        const mesh::Mesh checked = build_checked(parse_family(family_str), ell, ellstar);
        (void)checked;
        write_or_print(studies::run_eigen(parse_family(family_str), ell, ellstar, p, k, eta, eig_tol), out);
        return 0;
    }

    if (st_conv->parsed()) {
        write_or_print(studies::run_convergence(sigma, p, ell_max, eta, quad_level).rows, out);
        return 0;
    }
    if (st_inc->parsed()) {
        const bool boundary = parse_family(family_str) == mesh::Family::boundary_refined;
        const auto res = boundary ? studies::run_increments(p, true, ell, ellstar_max, eta)
                                  : studies::run_increments(p, false, ell_max, 0, eta);
        write_or_print(res.rows, out);
        return 0;
    }
    if (st_cond->parsed()) {
        write_or_print(studies::run_conditioning(p, ell_max, ellstar_max, eta).rows, out);
        return 0;
    }
    if (st_eigs->parsed()) {
        write_or_print(studies::run_eigen(parse_family(family_str), ell, ellstar, p, k, eta), out);
        return 0;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const snowdg::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const snowdg::mesh_error& e) {
        std::cerr << "mesh validation failure: " << e.what() << "\n";
        return kExitMesh;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
