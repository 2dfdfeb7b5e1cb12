"""Stateless HTTP facade over construction, points, bounds, and integration.

Every endpoint is a pure function of its request body; nothing is cached or
stored between calls. Domain validation failures surface as 400 with the
offending message, schema failures as FastAPI's usual 422.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .bounds import best_bound_over_lambda
from .cbc import RuleSpec, construct
from .estimator import builtin_integrand, rqmc_estimate
from .points import format_points_text, generate_point_set
from .scramble import ScrambleConfig, order_d_scramble
from .schemas import (
    BoundRequest,
    BoundResponse,
    ConstructRequest,
    ConstructResponse,
    HealthResponse,
    IntegrateRequest,
    IntegrateResponse,
    PointsRequest,
    PointsResponse,
    SlopeModel,
    SweepRequest,
    SweepResponse,
    TauBoundModel,
)
from .sweep import SweepConfig, SweepSetting, fit_slope, preset, run_sweep, sweep_csv


def create_app() -> FastAPI:
    app = FastAPI(title="polylat", description=__doc__)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok")

    @app.post("/construct", response_model=ConstructResponse)
    def construct_rule(req: ConstructRequest) -> ConstructResponse:
        rule = construct(
            req.b,
            req.m,
            req.s,
            req.d,
            req.alpha,
            req.weights.to_weights(),
            method=req.method,
            modulus=tuple(req.modulus) if req.modulus is not None else None,
            generator=tuple(req.generator) if req.generator is not None else None,
        )
        return ConstructResponse(rule=rule.to_dict(), criterion_value=rule.criterion_value)

    @app.post("/points", response_model=PointsResponse)
    def export_points(req: PointsRequest) -> PointsResponse:
        rule = RuleSpec.from_dict(req.rule)
        ps = generate_point_set(rule.q, rule.context(), req.depth)
        if req.scrambled:
            cfg = ScrambleConfig(seed=req.seed, replication_id=req.replication_id)
            ps = order_d_scramble(ps, rule.d, cfg)
        values = ps.to_floats()
        return PointsResponse(
            text=format_points_text(values),
            n_points=values.shape[0],
            dim=values.shape[1],
        )

    @app.post("/bound", response_model=BoundResponse)
    def bound_report(req: BoundRequest) -> BoundResponse:
        rule = RuleSpec.from_dict(req.rule)
        tau_full = rule.s * rule.d
        lam, val = best_bound_over_lambda(
            tau_full, rule.m, rule.alpha, rule.d, rule.weights, rule.b, req.grid_size
        )
        crit = rule.criterion_value
        ratio = 0.0 if val == 0.0 else crit / val
        per_tau = None
        if req.per_tau:
            per_tau = []
            for tau in range(1, tau_full + 1):
                lt, vt = best_bound_over_lambda(
                    tau, rule.m, rule.alpha, rule.d, rule.weights, rule.b, req.grid_size
                )
                per_tau.append(TauBoundModel(tau=tau, lambda_star=lt, bound_star=vt))
        return BoundResponse(
            lambda_star=lam,
            bound_star=val,
            criterion_value=crit,
            ratio=ratio,
            per_tau=per_tau,
        )

    @app.post("/integrate", response_model=IntegrateResponse)
    def integrate(req: IntegrateRequest) -> IntegrateResponse:
        rule = RuleSpec.from_dict(req.rule)
        f = builtin_integrand(rule.s, req.kind, **req.params)
        res = rqmc_estimate(
            f,
            rule,
            replications=req.replications,
            seed=req.seed,
            depth=req.depth,
            threads=req.threads,
        )
        exact = f.exact_integral
        return IntegrateResponse(
            estimates=list(res.estimates),
            mean=res.mean,
            sample_variance=res.sample_variance,
            stderr=res.stderr,
            replications=res.replications,
            seed=res.seed,
            description=f.description,
            exact_integral=exact,
            abs_error=None if exact is None else abs(res.mean - exact),
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        if req.preset is not None:
            if req.settings is not None:
                raise ValueError("give either a preset or explicit settings, not both")
            config = preset(req.preset, req.m_lo, req.m_hi, req.base)
        else:
            settings = tuple(
                SweepSetting(
                    alpha=s.alpha,
                    d=s.d,
                    s=s.s,
                    weights=tuple(s.weights) if isinstance(s.weights, list) else s.weights,
                )
                for s in (req.settings or [])
            )
            config = SweepConfig(
                m_lo=req.m_lo, m_hi=req.m_hi, base=req.base, settings=settings
            )
        rows = run_sweep(config, method=req.method)
        slopes = [
            SlopeModel(
                config_id=cid,
                label=st.label(),
                slope=fit_slope(rows, config.base, cid),
            )
            for cid, st in enumerate(config.settings)
        ]
        return SweepResponse(csv=sweep_csv(config, rows), slopes=slopes)

    return app


app = create_app()
