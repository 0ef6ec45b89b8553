"""Acceptance gate: one test per shipped claim, one printed verdict each.

Run `pytest tests/test_acceptance.py -v -s` to see a PASS line per
criterion. Every comparison here is against the independent references
in tests/reference.py or against frozen, hand-derived values; tolerances
are stated inline and are part of the claim.
"""

import itertools
import random
import time

from quell.actuation import (
    ActuationMode,
    ActuatorPolicy,
    DEFAULT_SHARES,
    ResourceShares,
    SchedulerModel,
    actuate,
    cfs_timeslice,
)
from quell.config import load_scenario
from quell.detectors import GroundTruth, StochasticSource, TraceSource, next_verdict
from quell.efficacy import (
    EfficacyTarget,
    TargetKind,
    budget_to_time,
    load_curve_csv,
    required_measurements,
)
from quell.hostadapter import FakeHostAdapter
from quell.simulation import (
    Cliff,
    EpochRecord,
    ProcessSpec,
    ProgressModel,
    Proportional,
    Scenario,
    ScenarioLog,
    progress_rate,
    run_scenario,
    slowdown,
)
from quell.supervisor import supervise
from quell.threat import (
    AssessmentPolicy,
    LifecycleState,
    ThreatLedger,
    Verdict,
    resolve_terminable,
    step_epoch,
)

from reference import (
    BENIGN,
    MALICIOUS,
    fold_sum,
    ledger_trajectory,
    reference_progress,
    reference_slowdown,
)

M, B = Verdict.MALICIOUS, Verdict.BENIGN
INC = AssessmentPolicy.incremental()

RESOURCE_NAMES = ("cpu", "memory", "network", "filesystem")

ALLOWED_EDGES = {
    ("normal", "normal"),
    ("normal", "suspicious"),
    ("normal", "terminable"),
    ("suspicious", "suspicious"),
    ("suspicious", "normal"),
    ("suspicious", "terminable"),
    ("terminable", "terminable"),
    ("terminable", "terminated"),
}


def drive_ledger(verdicts, budget):
    """Package-side walk mirroring the reference trajectory format."""
    ledger = ThreatLedger()
    rows = []
    for verdict in verdicts:
        if ledger.state is LifecycleState.TERMINATED:
            break
        if ledger.state is LifecycleState.TERMINABLE:
            ledger = resolve_terminable(ledger, verdict)
        else:
            ledger, _ = step_epoch(ledger, verdict, INC, INC, budget)
        rows.append(
            (
                ledger.penalty,
                ledger.compensation,
                ledger.threat_index,
                ledger.state.value,
                ledger.epoch,
                ledger.measurements,
            )
        )
    return rows


def cpu_spec(process_id, verdicts, base_rate=100.0):
    model = ProgressModel(base_rate=base_rate, response={"cpu": Proportional()})
    return ProcessSpec(process_id, model, TraceSource(tuple(verdicts), start_epoch=1))


def make_scenario(specs, epochs, budget, seed=0):
    return Scenario(
        processes=tuple(specs),
        measurement_budget=budget,
        penalty_policy=INC,
        compensation_policy=INC,
        actuator=ActuatorPolicy(),
        epochs=epochs,
        seed=seed,
    )


def pinned_log(model, shares, epochs):
    """A log accruing at one fixed share vector, for calibration checks."""
    rate = progress_rate(model, shares)
    records = []
    cumulative = 0.0
    for epoch in range(epochs):
        cumulative += rate
        records.append(
            EpochRecord(
                epoch=epoch,
                process_id="p",
                verdict="none",
                penalty=0.0,
                compensation=0.0,
                threat_index=0.0,
                state="normal",
                cpu=shares.cpu,
                memory=shares.memory,
                network=shares.network,
                filesystem=shares.filesystem,
                progress=rate,
                cumulative=cumulative,
            )
        )
    return ScenarioLog(epochs=epochs, records=tuple(records))


def test_scoring_protocol_matches_brute_force_reference():
    start = time.perf_counter()
    sequences = 0
    for budget in (8, 6):
        for verdicts in itertools.product((M, B), repeat=8):
            expected = ledger_trajectory([v.value for v in verdicts], budget)
            assert drive_ledger(verdicts, budget) == expected
            sequences += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(
        f"\nPASS 1/9 scoring protocol equals the brute-force reference "
        f"field-for-field over every length-8 verdict sequence "
        f"({sequences} sequences at two budgets, {elapsed:.2f} s)"
    )


def test_sustained_attack_slowdown_matches_closed_form(configs_dir):
    start = time.perf_counter()
    scenario = load_scenario(configs_dir / "worked_attack.ini")
    with_log = run_scenario(scenario)
    base_log = run_scenario(scenario.without_response())
    report = slowdown(with_log, base_log, "attack")

    oracle_with = fold_sum(reference_progress(225.7, [MALICIOUS] * 14, 15))
    oracle_without = fold_sum([225.7] * 15)
    oracle = reference_slowdown(oracle_with, oracle_without)

    assert with_log.total_progress("attack") == oracle_with
    assert base_log.total_progress("attack") == oracle_without
    assert abs(report.slowdown_pct - oracle) <= 5e-7
    assert round(oracle, 2) == 79.27
    assert abs(oracle - 79.6) <= 1.0
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(
        f"PASS 2/9 sustained-attack slowdown {report.slowdown_pct:.6f}% equals its "
        f"closed form to 6 decimals and sits within 1.0 point of the 79.6% field "
        f"anchor ({elapsed:.2f} s)"
    )


def test_recovery_is_gentler_and_benign_is_untouched(configs_dir):
    recovery = load_scenario(configs_dir / "recovery.ini")
    recovery_report = slowdown(
        run_scenario(recovery), run_scenario(recovery.without_response()), "worker"
    )
    oracle = reference_slowdown(
        fold_sum(reference_progress(100.0, [MALICIOUS] * 5 + [BENIGN] * 9, 15)),
        fold_sum([100.0] * 15),
    )
    assert recovery_report.slowdown_pct == oracle
    assert f"{recovery_report.slowdown_pct:.6f}" == "33.000000"

    attack = load_scenario(configs_dir / "worked_attack.ini")
    attack_report = slowdown(
        run_scenario(attack), run_scenario(attack.without_response()), "attack"
    )
    assert recovery_report.slowdown_pct < attack_report.slowdown_pct

    benign = load_scenario(configs_dir / "benign.ini")
    benign_report = slowdown(
        run_scenario(benign), run_scenario(benign.without_response()), "builder"
    )
    assert benign_report.slowdown_pct == 0.0
    print(
        f"PASS 3/9 false-positive recovery costs {recovery_report.slowdown_pct:.6f}% "
        f"(exactly its closed form, below the sustained attack's "
        f"{attack_report.slowdown_pct:.6f}%) and an all-benign run costs exactly 0%"
    )


def test_measurement_budget_planning_anchors(configs_dir):
    curve = load_curve_csv(configs_dir / "curve_boosted_trees.csv")
    needed = required_measurements(curve, EfficacyTarget(TargetKind.F1_AT_LEAST, 0.9))
    assert needed == 23
    assert budget_to_time(needed, curve) == 2.3

    fpr_needed = required_measurements(curve, EfficacyTarget(TargetKind.FPR_AT_MOST, 0.1))
    assert fpr_needed == 50

    sparse = load_curve_csv(configs_dir / "curve_small_ann.csv")
    assert required_measurements(sparse, EfficacyTarget(TargetKind.F1_AT_LEAST, 0.75)) == 40
    print(
        "PASS 4/9 planning anchors hold: F1 >= 0.9 needs 23 measurements "
        "(exactly 2.3 s at 100 ms epochs), FPR <= 0.1 needs 50, and the sparser "
        "curve needs 40 for F1 >= 0.75"
    )


def test_share_response_calibration():
    model = ProgressModel(base_rate=100.0, response={"cpu": Proportional()})
    base = pinned_log(model, ResourceShares(), 20)
    calibration = [
        (0.9, 10.0, 8.7, 5.0),
        (0.5, 50.0, 45.2, 5.0),
        (0.01, 99.0, 99.7, 1.0),
    ]
    observed = []
    for share, exact, anchor, tolerance in calibration:
        value = slowdown(pinned_log(model, ResourceShares(cpu=share), 20), base, "p").slowdown_pct
        assert abs(value - exact) < 1e-9
        assert abs(value - anchor) <= tolerance
        observed.append(value)

    cliff_model = ProgressModel(base_rate=100.0, response={"memory": Cliff(0.95, 4e-4)})
    cliff_base = pinned_log(cliff_model, ResourceShares(), 20)
    cliff_value = slowdown(
        pinned_log(cliff_model, ResourceShares(memory=0.936), 20), cliff_base, "p"
    ).slowdown_pct
    assert cliff_value >= 99.9
    print(
        f"PASS 5/9 proportional-share slowdowns "
        f"{{{observed[0]:.6f}, {observed[1]:.6f}, {observed[2]:.6f}}}% hit the exact "
        f"{{10, 50, 99}}%, within tolerance of the measured {{8.7, 45.2, 99.7}}% "
        f"anchors; the memory cliff at share 0.936 costs {cliff_value:.6f}% (>= 99.9%)"
    )


def random_actuator(rng):
    floors = {
        f"floor_{name}": rng.uniform(1e-6, 0.2) for name in RESOURCE_NAMES
    }
    return ActuatorPolicy(
        throttle_step=rng.uniform(0.01, 0.6),
        mode=rng.choice((ActuationMode.ADDITIVE, ActuationMode.MULTIPLICATIVE)),
        targets=tuple(rng.sample(RESOURCE_NAMES, k=rng.randint(1, 4))),
        **floors,
    )


def test_invariant_suites_over_random_cases():
    total_start = time.perf_counter()
    suite_lines = []

    # Suite 1: score bounds, threat gating, and lifecycle edges.
    start = time.perf_counter()
    rng = random.Random(101)
    policies = (
        AssessmentPolicy.incremental(),
        AssessmentPolicy.linear(2.0, 1.0),
        AssessmentPolicy.linear(1.0, 0.5),
        AssessmentPolicy.exponential(),
    )
    cases = 10_000
    for _ in range(cases):
        budget = rng.randint(1, 12)
        penalty_policy = rng.choice(policies)
        compensation_policy = rng.choice(policies)
        ledger = ThreatLedger()
        for _ in range(rng.randint(1, 16)):
            if ledger.state is LifecycleState.TERMINATED:
                break
            verdict = M if rng.random() < 0.5 else B
            previous = ledger
            if ledger.state is LifecycleState.TERMINABLE:
                ledger = resolve_terminable(ledger, verdict)
            else:
                ledger, _ = step_epoch(
                    ledger, verdict, penalty_policy, compensation_policy, budget
                )
            assert 0.0 <= ledger.penalty <= 100.0
            assert 0.0 <= ledger.compensation <= 100.0
            assert 0.0 <= ledger.threat_index <= 100.0
            assert ledger.penalty >= previous.penalty
            assert ledger.compensation >= previous.compensation
            assert (previous.state.value, ledger.state.value) in ALLOWED_EDGES
            if ledger.state is LifecycleState.NORMAL:
                assert ledger.threat_index == 0.0
            if ledger.state in (LifecycleState.TERMINABLE, LifecycleState.TERMINATED):
                assert ledger.measurements >= budget
    suite_lines.append(f"scores/edges {cases} cases {time.perf_counter() - start:.1f}s")

    # Suite 2: shares never leave [floor, 1.0] and bystanders never move.
    start = time.perf_counter()
    rng = random.Random(202)
    cases = 10_000
    for _ in range(cases):
        policy = random_actuator(rng)
        shares = DEFAULT_SHARES
        for _ in range(rng.randint(1, 6)):
            shares = actuate(shares, rng.uniform(-30.0, 30.0), policy)
            for name in RESOURCE_NAMES:
                value = shares.get(name)
                if name in policy.targets:
                    assert policy.floor(name) <= value <= 1.0
                else:
                    assert value == 1.0
    suite_lines.append(f"share bounds {cases} cases {time.perf_counter() - start:.1f}s")

    # Suite 3: throttling is monotone in the sign of the threat change.
    start = time.perf_counter()
    rng = random.Random(303)
    cases = 10_000
    for _ in range(cases):
        policy = random_actuator(rng)
        shares = DEFAULT_SHARES
        for _ in range(rng.randint(0, 4)):
            shares = actuate(shares, rng.uniform(-20.0, 20.0), policy)
        delta = rng.uniform(-20.0, 20.0)
        moved = actuate(shares, delta, policy)
        for name in policy.targets:
            if delta > 0.0:
                assert moved.get(name) <= shares.get(name)
            elif delta < 0.0:
                assert moved.get(name) >= shares.get(name)
        assert actuate(shares, 0.0, policy) is shares
    suite_lines.append(f"monotone throttle {cases} cases {time.perf_counter() - start:.1f}s")

    # Suite 4: timeslices conserve the scheduling period.
    start = time.perf_counter()
    rng = random.Random(404)
    cases = 10_000
    for _ in range(cases):
        period = rng.uniform(0.1, 1000.0)
        weights = {
            f"p{i}": rng.uniform(1e-6, 10.0) for i in range(rng.randint(1, 12))
        }
        slices = cfs_timeslice(SchedulerModel(target_latency_ms=period, weights=weights))
        assert all(value >= 0.0 for value in slices.values())
        assert abs(sum(slices.values()) - period) <= 1e-9 * period
    suite_lines.append(f"timeslice conservation {cases} cases {time.perf_counter() - start:.1f}s")

    # Suite 5: fixed seeds mean identical verdicts and identical runs.
    start = time.perf_counter()
    rng = random.Random(505)
    cases = 10_000
    for case in range(cases):
        seed = rng.getrandbits(64)
        tpr = rng.random()
        fpr = rng.random()
        truth = rng.choice((GroundTruth.ATTACK, GroundTruth.BENIGN))
        epoch = rng.randint(0, 10_000)
        first = StochasticSource(tpr, fpr, truth, seed=seed)
        second = StochasticSource(tpr, fpr, truth, seed=seed)
        assert next_verdict(first, epoch) is next_verdict(second, epoch)
        if case % 100 == 0:
            spec = ProcessSpec(
                "p",
                ProgressModel(base_rate=50.0, response={"cpu": Proportional()}),
                StochasticSource(1.0, 0.3, GroundTruth.BENIGN, seed=seed),
            )
            scenario = make_scenario([spec], epochs=10, budget=6, seed=rng.getrandbits(64))
            assert run_scenario(scenario).to_csv_text() == run_scenario(scenario).to_csv_text()
    suite_lines.append(f"seeded determinism {cases} cases {time.perf_counter() - start:.1f}s")

    total = time.perf_counter() - total_start
    assert total < 30.0
    print(
        f"PASS 6/9 invariant suites all hold ({'; '.join(suite_lines)}; "
        f"total {total:.1f} s < 30 s)"
    )


def test_stochastic_detector_calibration():
    source = StochasticSource(1.0, 0.04, GroundTruth.BENIGN, seed=2026)
    flagged = sum(1 for epoch in range(10_000) if next_verdict(source, epoch) is M)
    assert flagged == 380
    fraction = flagged / 10_000
    assert 0.03 <= fraction <= 0.05
    print(
        f"PASS 7/9 benign-process detector at 4% false-positive rate flags "
        f"{flagged}/10000 epochs (fraction {fraction:.4f}, within 0.04 +/- 0.01; "
        f"frozen at exactly 380 for this seed)"
    )


def test_supervision_call_sequences():
    defaults = "cpu=1.000000;mem=1.000000;net=1.000000;fs=1.000000"

    def run(verdicts, epochs, budget):
        adapter = FakeHostAdapter()
        supervise(make_scenario([cpu_spec("proc", verdicts)], epochs=epochs, budget=budget), adapter)
        return [(c.call, c.args) for c in adapter.calls]

    def apply_cpu(value):
        return ("apply_shares", f"cpu={value};mem=1.000000;net=1.000000;fs=1.000000")

    assert run([M] * 16, epochs=17, budget=15) == [
        ("attach", defaults),
        apply_cpu("0.900000"),
        apply_cpu("0.700000"),
        apply_cpu("0.400000"),
        apply_cpu("0.010000"),
        ("terminate", ""),
    ]
    assert run([M] * 5 + [B] * 12, epochs=18, budget=18) == [
        ("attach", defaults),
        apply_cpu("0.900000"),
        apply_cpu("0.700000"),
        apply_cpu("0.400000"),
        apply_cpu("0.010000"),
        apply_cpu("0.110000"),
        apply_cpu("0.310000"),
        apply_cpu("0.610000"),
        apply_cpu("1.000000"),
    ]
    assert run([M, M], epochs=3, budget=1) == [
        ("attach", defaults),
        apply_cpu("0.900000"),
        ("terminate", ""),
    ]
    assert run([B] * 5, epochs=6, budget=10) == [("attach", defaults)]
    print(
        "PASS 8/9 supervision call logs match the frozen sequences exactly: "
        "one apply per share change, one terminate on terminable+malicious, "
        "no calls for a quiet process"
    )


def test_bulk_encryption_shape_stays_below_two_percent():
    base_rate = 1167.0
    spec = cpu_spec("encryptor", [M] * 19, base_rate=base_rate)
    rows = run_scenario(make_scenario([spec], epochs=20, budget=25)).for_process("encryptor")
    assert len(rows) == 20
    tail = rows[5:]
    assert all(r.progress < 0.02 * base_rate for r in tail)
    worst = max(r.progress for r in tail)
    print(
        f"PASS 9/9 bulk-encryption-shaped process is pinned after epoch 5: "
        f"worst tail rate {worst:.2f} of base {base_rate:.0f} per epoch "
        f"({100 * worst / base_rate:.2f}% < 2%). Hardware-scale throughput, "
        f"entropy-search, bit-flip, and platform-overhead figures are out of "
        f"scope for this model-level suite."
    )
