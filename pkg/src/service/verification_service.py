"""
The runner commands: each scenario composes the numerical services, fills the report and
trace tables and judges its acceptance criteria against the config's verdict thresholds.
"""
import logging
import math
import numpy as np
from model.drift import DirichletDrift, IndicatorComplementDrift, SmoothDrift
from model.errors import DomainError
from model.experiment import CommandOutcome, ExperimentConfig
from model.kernel import FbmVolterra, KernelSpec, RiemannLiouville
from model.path import Ensemble, TimeGrid
from model.solver import SolverConfig
from service import drift_service, kernel_service, stats_service
from service.path_service import PathService
from service.solver_service import SolverService
import config.app_settings as APP_SETTINGS

# sup_t of E[Y_t^2] + E[(int_0^t |Y_t - Y_s| / (t-s)^{3/2} ds)^2] for Y_t = t on [0, 1]
LINEAR_ORACLE_BETA = 0.5
LINEAR_ORACLE_NORM = 5.0


class VerificationService:
    """
    Dispatches a validated config to its scenario.

    Attributes:
        path_service (PathService): noise generation
        solver_service (SolverService): equation solving
        scenarios (dict): command -> bound scenario method
        logger (logging.Logger): logger for this class
    """
    def __init__(self, path_service: PathService = None, solver_service: SolverService = None):
        self.path_service = path_service or PathService()
        self.solver_service = solver_service or SolverService(self.path_service)
        self.logger = logging.getLogger(__name__)
        self.scenarios = {
            'paths': self._paths,
            'solve': self._solve,
            'verify-kernel': self._verify_kernel,
            'small-ball': self._small_ball,
            'dirichlet': self._dirichlet,
            'mixed-convergence': self._mixed_convergence,
            'besov': self._besov,
            'cgp-check': self._cgp_check,
        }

    def run(self, config: ExperimentConfig) -> CommandOutcome:
        """
        Execute the command of a config.

        Args:
            config (ExperimentConfig): validated config

        Returns:
            CommandOutcome: exported ensemble, tables and verdicts
        """
        scenario = self.scenarios.get(config.command)
        if scenario is None:
            raise DomainError(f"no scenario for command '{config.command}'")
        self.logger.info(f"Running '{config.command}' for config {config.config_hash}")
        outcome = scenario(config)

        failed = [verdict.name for verdict in outcome.verdicts if not verdict.passed]
        if failed:
            self.logger.warning(f"'{config.command}' failed criteria: {', '.join(failed)}")
        else:
            self.logger.info(f"'{config.command}' passed all {len(outcome.verdicts)} criteria")
        return outcome

    #-------------------------------------
    # Helpers
    #-------------------------------------
    def _grid(self, config: ExperimentConfig) -> TimeGrid:
        return TimeGrid(config.horizon, config.n_points)

    def _noise(self, config: ExperimentConfig, grid: TimeGrid) -> Ensemble:
        return self.path_service.generate_ensemble(
            config.kernel, grid, config.n_paths, config.master_seed, "volterra", config.config_hash
        )

    def _solutions(self, config: ExperimentConfig, grid: TimeGrid, noise: Ensemble) -> tuple:
        solver_config = SolverConfig(grid, config.params['x0'], config.drift, config.kernel,
                                     getattr(config.drift, 'growth_constant', None))
        return solver_config, self.solver_service.solve_ensemble(solver_config, noise)

    #-------------------------------------
    # paths
    #-------------------------------------
    def _paths(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        method = config.params['method']
        methods = ('volterra', 'exact') if method == 'both' else (method,)
        n_se = config.verdict['standard_errors']
        centering_limit = config.verdict['centering_standard_errors']
        outcome = CommandOutcome(config.command)

        horizon = grid.horizon
        middle = float(grid.points[max(grid.n_points // 2 - 1, 0)])
        targets = {
            'variance': (horizon, kernel_service.process_variance(config.kernel, horizon)),
            'covariance': (middle, _covariance(config.kernel, middle, horizon)),
        }

        estimates = {}
        for name in methods:
            ensemble = self.path_service.generate_ensemble(
                config.kernel, grid, config.n_paths, config.master_seed, name, config.config_hash
            )
            if outcome.ensemble is None:
                outcome.ensemble = ensemble

            centering = stats_service.centering_statistic(ensemble)
            outcome.check(f"{name}_centered", centering <= centering_limit, centering, f"<= {centering_limit} SE")

            for quantity, (s, target) in targets.items():
                report = stats_service.product_moment(ensemble.at(s), ensemble.at(horizon), config.master_seed)
                estimates[(name, quantity)] = report
                row = {'method': name, 'quantity': quantity, 's': s, 't': horizon, 'target': target}
                row.update(report.to_dict())
                outcome.report_rows.append(row)
                outcome.check(f"{name}_{quantity}", report.within(target, n_se), report.estimate,
                              f"within {n_se} SE of {target:.6g}")

        if len(methods) == 2:
            for quantity in targets:
                volterra, exact = estimates[('volterra', quantity)], estimates[('exact', quantity)]
                combined = math.hypot(volterra.std_error, exact.std_error)
                gap = abs(volterra.estimate - exact.estimate)
                outcome.check(f"cross_validation_{quantity}", gap <= n_se * combined, gap,
                              f"<= {n_se} combined SE ({n_se * combined:.3g})")
        return outcome

    #-------------------------------------
    # solve
    #-------------------------------------
    def _solve(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        noise = self._noise(config, grid)
        solver_config, solutions = self._solutions(config, grid, noise)
        outcome = CommandOutcome(config.command, solutions)

        residual = max(
            self.solver_service.residual(solutions.path(row), solver_config, noise.path(row))
            for row in range(solutions.n_paths)
        )
        tolerance = config.verdict['residual_tol']
        outcome.report_rows.append({'quantity': 'residual', 'estimate': residual})
        outcome.check('residual', residual <= tolerance, residual, f"<= {tolerance}")

        terminal = stats_service.mean_report(solutions.at(grid.horizon), config.master_seed)
        outcome.report_rows.append({'quantity': 'terminal_mean', **terminal.to_dict()})

        growth = getattr(config.drift, 'growth_constant', None)
        if growth is not None:
            x0 = solver_config.x0
            holds = drift_service.check_linear_growth(
                config.drift, growth, grid.with_origin(), np.linspace(x0 - 10.0, x0 + 10.0, 401)
            )
            outcome.check('linear_growth', holds, growth, f"|b| <= {growth} (1 + |x|) on the sample mesh")

        if not isinstance(config.drift, SmoothDrift):
            self._ladder(config, solver_config, noise, outcome)
        return outcome

    def _ladder(self, config: ExperimentConfig, solver_config: SolverConfig, noise: Ensemble,
                outcome: CommandOutcome):
        levels = config.params['levels']
        sample = noise.head(config.params['ladder_paths'])
        required = config.verdict['ladder_fraction']
        finals = []
        for shape in config.params['shapes']:
            solutions, trace = self.solver_service.approximation_ensemble(solver_config, sample, levels, shape)
            finals.append((shape, solutions[-1], trace))

            fraction = float(np.mean(np.all(np.diff(trace, axis=1) < 0.0, axis=1)))
            outcome.report_rows.append({'quantity': f"ladder_decreasing_{shape}", 'estimate': fraction,
                                        'n_samples': sample.n_paths})
            outcome.check(f"ladder_decreasing_{shape}", fraction >= required, fraction,
                          f">= {required} of {sample.n_paths} traces strictly decreasing")
            for row, path_index in enumerate(sample.path_indices):
                for column, (level, next_level) in enumerate(zip(levels, levels[1:])):
                    outcome.trace_rows.append({
                        'shape': shape,
                        'path_index': int(path_index),
                        'level': level,
                        'next_level': next_level,
                        'sup_distance': float(trace[row, column])
                    })

        if len(finals) >= 2:
            (_, first, first_trace), (_, second, _) = finals[0], finals[1]
            gap = float(np.mean(np.max(np.abs(first.values - second.values), axis=1)))
            finest = float(np.mean(first_trace[:, -1]))
            factor = config.verdict['shape_gap_factor']
            outcome.report_rows.append({'quantity': 'shape_gap', 'estimate': gap, 'finest_self_difference': finest})
            outcome.check('shape_agreement', gap <= factor * finest, gap,
                          f"<= {factor} x finest self-difference ({finest:.3g})")

    #-------------------------------------
    # verify-kernel
    #-------------------------------------
    def _verify_kernel(self, config: ExperimentConfig) -> CommandOutcome:
        spec = config.kernel
        eps_grid = config.params['eps_grid']
        t_grid = config.params['t_grid']
        tolerance = config.verdict['slope_tolerance']
        components = spec.components()
        weight, main = max(components, key=lambda pair: pair[1].hurst)
        hurst = main.hurst

        report = kernel_service.verify_kernel_lower_bound(spec, hurst, eps_grid, t_grid, slope_tolerance=tolerance)
        outcome = CommandOutcome(config.command, report_rows=[{'quantity': 'ratio', **row} for row in report.rows])
        for t, slope in report.slopes.items():
            outcome.report_rows.append({'quantity': 'slope', 't': t, 'slope': slope, 'hurst': hurst})

        outcome.check('inf_ratio_positive', report.inf_ratio > 0.0, report.inf_ratio, "> 0")
        if len(components) > 1:
            # a rougher component only lowers the slope, so mixtures are held to the upper side
            slope_ok = all(slope <= hurst + tolerance for slope in report.slopes.values())
            outcome.check('slope', slope_ok, max(report.slopes.values()), f"<= {hurst + tolerance:.4g} at every t")
            if all(w > 0.0 for w, _ in components):
                alone = kernel_service.verify_kernel_lower_bound(main, hurst, eps_grid, t_grid,
                                                                 slope_tolerance=tolerance)
                floor = abs(weight) * alone.inf_ratio
                outcome.check('mixture_dominates_component', report.inf_ratio >= floor * (1.0 - 1e-9),
                              report.inf_ratio, f">= {floor:.6g} (H={hurst} component alone)")
        else:
            worst = max(report.slopes.values(), key=lambda slope: abs(slope - hurst))
            outcome.check('slope', abs(worst - hurst) <= tolerance, worst, f"{hurst} +/- {tolerance} at every t")

        if isinstance(spec, RiemannLiouville):
            expected = 1.0 / math.sqrt(2.0 * hurst)
            outcome.check('closed_form_ratio', math.isclose(report.inf_ratio, expected, rel_tol=1e-8),
                          report.inf_ratio, f"1/sqrt(2H) = {expected:.10g}")
        if isinstance(spec, FbmVolterra):
            upper = kernel_service.kernel_upper_bound_ratio(spec, t_grid, np.linspace(0.01, 0.99, 99).tolist())
            outcome.report_rows.append({'quantity': 'upper_bound_ratio', 'estimate': upper})
            outcome.check('upper_bound_finite', math.isfinite(upper), upper, "finite")
        return outcome

    #-------------------------------------
    # small-ball
    #-------------------------------------
    def _small_ball(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        noise = self._noise(config, grid)
        _, solutions = self._solutions(config, grid, noise)
        params = config.params
        t, x, x0 = params['t'], params['x'], params['x0']
        hurst = config.kernel.hurst
        outcome = CommandOutcome(config.command, solutions)

        reports, fit = stats_service.small_ball_probability(solutions, t, x, params['alphas'])
        ratios = stats_service.occupation_bound_ratios(reports, t, hurst)

        # zero-drift control: x0 + B_t is Gaussian with the kernel's variance
        variance = kernel_service.process_variance(config.kernel, t)
        control = x0 + noise.at(t)
        n = control.size
        worst_z = 0.0
        for report, ratio in zip(reports, ratios):
            alpha = report.extras['alpha']
            oracle = stats_service.gaussian_band_probability(variance, x, alpha, mean=x0)
            observed = float(np.mean((control > x) & (control < x + alpha)))
            binomial_se = math.sqrt(oracle * (1.0 - oracle) / n)
            worst_z = max(worst_z, abs(observed - oracle) / binomial_se if binomial_se > 0.0 else math.inf)
            outcome.report_rows.append({
                'alpha': alpha,
                'probability': report.estimate,
                'std_error': report.std_error,
                'hits': report.extras['hits'],
                'bound_ratio': ratio,
                'control_probability': observed,
                'control_oracle': oracle
            })

        slope_floor = (1.0 - hurst) - config.verdict['small_ball_slope_tolerance']
        outcome.check('small_ball_slope', fit.slope >= slope_floor, fit.slope, f">= {slope_floor:.4g}")

        qualifying = [
            ratio for report, ratio in zip(reports, ratios)
            if report.extras['hits'] >= APP_SETTINGS.SMALL_BALL_MIN_HITS
        ]
        factor = config.verdict['bound_ratio_factor']
        stability = max(qualifying) / qualifying[0]
        outcome.check('bound_ratio_stable', stability <= factor, stability,
                      f"max ratio <= {factor} x ratio at the widest ball")

        n_se = config.verdict['standard_errors']
        outcome.check('zero_drift_control', worst_z <= n_se, worst_z, f"<= {n_se} binomial SE at every alpha")
        outcome.notes.append(f"fitted slope {fit.slope:.4f} (r^2 {fit.r_squared:.4f}) over {len(fit.points)} widths")
        return outcome

    #-------------------------------------
    # dirichlet
    #-------------------------------------
    def _dirichlet(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        noise = self._noise(config, grid)
        _, solutions = self._solutions(config, grid, noise)
        drift = config.drift
        x0 = config.params['x0']
        outcome = CommandOutcome(config.command, solutions)
        free = x0 + noise.values

        if isinstance(drift, IndicatorComplementDrift):
            if drift.inner is not None:
                raise DomainError("the explicit solution is only known for the unit inner drift")
            expected = free + grid.points
            regions = [drift.excluded]
            threshold = np.full(solutions.n_paths, config.verdict['indicator_gap_cells'] * grid.step)
        elif isinstance(drift, DirichletDrift):
            expected = free
            regions = [term.members for term in drift.terms]
            threshold = None
        else:
            raise DomainError(f"no explicit solution for {drift.kind} drift")

        occupation = sum(stats_service.occupation_times(solutions, region) for region in regions)
        fattened = any(region.fattening > 0.0 for region in regions)
        if threshold is None:
            # every Euler step that sees the set moves X by at most sup |b| Delta
            threshold = drift.sup_bound() * (occupation + grid.step) if fattened else np.zeros(solutions.n_paths)

        gaps = np.max(np.abs(solutions.values - expected), axis=1)
        outcome.check('explicit_solution', bool(np.all(gaps <= threshold)), float(gaps.max()),
                      f"<= {float(threshold.max()):.3g} on every path")

        occupation_report = stats_service.mean_report(occupation, config.master_seed)
        outcome.report_rows.append({'quantity': 'max_identity_gap', 'estimate': float(gaps.max())})
        outcome.report_rows.append({'quantity': 'occupation_time', **occupation_report.to_dict()})
        if not fattened:
            outcome.check('zero_occupation', float(occupation.max()) == 0.0, float(occupation.max()), "== 0")
        return outcome

    #-------------------------------------
    # mixed-convergence
    #-------------------------------------
    def _mixed_convergence(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        params = config.params
        ns, h1 = params['ns'], params['h1']
        drift = config.drift
        ensembles = self.solver_service.mixed_ensembles(
            drift, h1, params['h2'], ns, grid, params['x0'], config.n_paths, config.master_seed,
            True, config.config_hash
        )
        rows, fit = stats_service.convergence_study(ensembles, ns, params['beta'], h1)
        reference = ensembles['reference']
        outcome = CommandOutcome(config.command, reference, rows)

        for n in ns:
            distances = np.max(np.abs(ensembles[n].values - reference.values), axis=1)
            outcome.trace_rows.extend(
                {'n': n, 'path_index': int(index), 'sup_distance': float(distance)}
                for index, distance in zip(reference.path_indices, distances)
            )

        l2 = [row['l2'] for row in rows]
        outcome.check('l2_monotone', all(b < a for a, b in zip(l2, l2[1:])), l2[-1], "strictly decreasing in N")

        besov = [row['besov'] for row in rows]
        outcome.check('besov_monotone', all(b <= a * (1.0 + 1e-12) for a, b in zip(besov, besov[1:])), besov[-1],
                      "nonincreasing in N")

        if isinstance(drift, SmoothDrift):
            ceiling = config.verdict['l2_slope_max']
            slope = fit.slope if fit is not None else math.nan
            outcome.check('l2_slope', fit is not None and slope <= ceiling, slope, f"<= {ceiling}")

        if isinstance(drift, SmoothDrift) and drift.sup_bound() == 0.0:
            scaled = [row['l2'] * row['n'] ** 2 for row in rows]
            spread = (max(scaled) - min(scaled)) / max(scaled)
            tolerance = config.verdict['identity_rel_tol']
            outcome.check('zero_drift_identity', spread <= tolerance, spread, f"relative spread of l2 N^2 <= {tolerance}")

            target = grid.horizon ** (2.0 * h1)
            se = rows[0]['l2_se'] * rows[0]['n'] ** 2
            n_se = config.verdict['standard_errors']
            outcome.check('zero_drift_variance', abs(scaled[0] - target) <= n_se * se, scaled[0],
                          f"within {n_se} SE of T^(2 H1) = {target:.6g}")

        if fit is not None:
            outcome.notes.append(f"l2 slope in N: {fit.slope:.4f} (r^2 {fit.r_squared:.4f})")
        return outcome

    #-------------------------------------
    # besov
    #-------------------------------------
    def _besov(self, config: ExperimentConfig) -> CommandOutcome:
        params = config.params
        drift = config.drift or drift_service.smooth_drift('zero')
        n = params['n']
        outcome = CommandOutcome(config.command)

        oracle_grid = TimeGrid(1.0, params['oracle_points'])
        line = Ensemble(oracle_grid, oracle_grid.points[None, :], config.master_seed)
        oracle = stats_service.besov_norm(line, LINEAR_ORACLE_BETA)
        error = abs(oracle.norm_value - LINEAR_ORACLE_NORM) / LINEAR_ORACLE_NORM
        tolerance = config.verdict['besov_oracle_tolerance']
        outcome.report_rows.append({
            'quantity': 'linear_oracle',
            'n_points': params['oracle_points'],
            'beta': LINEAR_ORACLE_BETA,
            'norm': oracle.norm_value,
            'target': LINEAR_ORACLE_NORM
        })
        outcome.check('linear_oracle', error <= tolerance, oracle.norm_value,
                      f"within {tolerance:.0%} of {LINEAR_ORACLE_NORM}")

        betas = (params['stable_beta'], params['rough_beta'])
        norms = {beta: [] for beta in betas}
        for n_points in params['refinements']:
            grid = TimeGrid(config.horizon, n_points)
            ensembles = self.solver_service.mixed_ensembles(
                drift, params['h1'], params['h2'], [n], grid, params['x0'], config.n_paths, config.master_seed,
                True, config.config_hash
            )
            outcome.ensemble = ensembles[n]
            for beta in betas:
                estimate = stats_service.besov_norm(ensembles[n], beta)
                norms[beta].append(estimate.norm_value)
                outcome.report_rows.append({
                    'quantity': 'solution',
                    'n_points': n_points,
                    'beta': beta,
                    'norm': estimate.norm_value,
                    'grid_bias_note': estimate.grid_bias_note
                })

        low, high = config.verdict['besov_stable_low'], config.verdict['besov_stable_high']
        stable = _ratios(norms[params['stable_beta']])
        outcome.check('stable_beta', all(low <= r <= high for r in stable), max(stable, default=1.0),
                      f"refinement ratios in [{low}, {high}]")
        growth = _ratios(norms[params['rough_beta']])
        floor = config.verdict['besov_growth']
        outcome.check('rough_beta', bool(growth) and min(growth) >= floor, min(growth, default=math.nan),
                      f">= {floor} per refinement")
        return outcome

    #-------------------------------------
    # cgp-check
    #-------------------------------------
    def _cgp_check(self, config: ExperimentConfig) -> CommandOutcome:
        grid = self._grid(config)
        noise = self._noise(config, grid)
        _, solutions = self._solutions(config, grid, noise)
        t, epsilon = config.params['t'], config.params['epsilon']
        verdict = config.verdict
        outcome = CommandOutcome(config.command, solutions)

        residuals = self.solver_service.cgp_residuals(solutions, noise, config.kernel, t, epsilon)
        normality = stats_service.normality_check(residuals)
        outcome.report_rows.append({'t': t, 'epsilon': epsilon, **normality.to_dict()})

        mean = normality.mean.value
        outcome.check('cgp_mean', abs(mean) < verdict['cgp_mean'], mean, f"|mean| < {verdict['cgp_mean']}")
        variance = normality.variance.value
        outcome.check('cgp_variance', verdict['cgp_variance_low'] <= variance <= verdict['cgp_variance_high'],
                      variance, f"in [{verdict['cgp_variance_low']}, {verdict['cgp_variance_high']}]")
        kurtosis = normality.excess_kurtosis
        outcome.check('cgp_kurtosis', kurtosis.defined and abs(kurtosis.value) < verdict['cgp_kurtosis'],
                      kurtosis.value, f"|excess kurtosis| < {verdict['cgp_kurtosis']}")

        bound = config.drift.sup_bound()
        if math.isfinite(bound):
            y = solutions.at(t - epsilon) + noise.at(t) - noise.at(t - epsilon)
            gap = float(np.max(np.abs(solutions.at(t) - y)))
            limit = bound * epsilon * (1.0 + 1e-9) + 1e-12
            outcome.check('cgp_pathwise', gap <= limit, gap, f"<= sup|b| eps = {bound * epsilon:.6g}")
        return outcome


def _covariance(spec: KernelSpec, s: float, t: float) -> float:
    """Cov(B_s, B_t) for s <= t: closed form for fBm, quadrature otherwise."""
    if isinstance(spec, FbmVolterra):
        return kernel_service.fbm_covariance(spec.hurst, s, t)
    return kernel_service.cross_integral(spec, t, spec, s, 0.0, s)[0]


def _ratios(values: list) -> list:
    return [b / a for a, b in zip(values, values[1:])]
