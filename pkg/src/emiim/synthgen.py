"""Synthetic call-log generation from planted context-to-class rules.

A scenario declares time slots, locations, and contacts (with sampling
weights) plus an ordered rule list mapping context predicates to behavior
classes.  Records are sampled from the vocabularies, labeled by the first
matching rule, flipped to a different class with probability noise, and
rendered in the ingest log format.  The generator reports its own ground
truth so pipeline claims can be checked against a known oracle.

Scenario file syntax (one statement per line, '#' comments):

    SEGMENT S1 days=Mon-Fri start=09:00 end=10:00 weight=4
    LOCATION office weight=5
    CONTACT C1 weight=5
    IF segment=S1 AND contact=C1 THEN accept
    IF segment=S1 THEN reject
    DEFAULT missed
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Optional, Sequence

from .errors import InvalidConfigError
from .rng import make_rng, mix64
from .types import BehaviorClass, CallRecord, CallType, DAY_LABELS

#: Monday anchoring week 0 of every generated log.
ANCHOR_MONDAY = date(2024, 1, 1)

_CLASS_WORDS = {
    "accept": BehaviorClass.ACCEPT,
    "reject": BehaviorClass.REJECT,
    "missed": BehaviorClass.MISSED,
}

RULE_FIELDS = ("segment", "day", "location", "contact")


@dataclass(frozen=True)
class Slot:
    """A named sampling window: a minute interval on a set of weekdays."""

    slot_id: str
    days: tuple[int, ...]  # 0=Mon .. 6=Sun
    start_minute: int
    end_minute: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.days:
            raise InvalidConfigError(f"slot {self.slot_id}: empty day set")
        if not 0 <= self.start_minute < self.end_minute <= 1440:
            raise InvalidConfigError(f"slot {self.slot_id}: bad minute range")
        if self.weight <= 0:
            raise InvalidConfigError(f"slot {self.slot_id}: weight must be positive")


@dataclass(frozen=True)
class WeightedValue:
    value: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise InvalidConfigError(f"{self.value}: weight must be positive")


@dataclass(frozen=True)
class Rule:
    """First-match rule: all conditions must hold; fields from RULE_FIELDS."""

    rule_id: str
    conditions: tuple[tuple[str, str], ...]
    target: BehaviorClass

    def matches(self, ctx: dict[str, str]) -> bool:
        return all(ctx[field] == value for field, value in self.conditions)


@dataclass(frozen=True)
class PlantedRuleSet:
    rules: tuple[Rule, ...]
    default_class: BehaviorClass
    noise: float
    n_records: int
    seed: int
    slots: tuple[Slot, ...]
    locations: tuple[WeightedValue, ...]
    contacts: tuple[WeightedValue, ...]
    n_weeks: int = 36

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise < 0.5:
            raise InvalidConfigError("noise must lie in [0, 0.5)")
        if self.n_records < 1:
            raise InvalidConfigError("n_records must be >= 1")
        if self.n_weeks < 1:
            raise InvalidConfigError("n_weeks must be >= 1")
        if not self.slots or not self.locations or not self.contacts:
            raise InvalidConfigError("slots, locations, and contacts must be non-empty")
        slot_ids = {s.slot_id for s in self.slots}
        if len(slot_ids) != len(self.slots):
            raise InvalidConfigError("duplicate slot ids")
        vocab = {
            "segment": slot_ids,
            "day": set(DAY_LABELS),
            "location": {loc.value for loc in self.locations},
            "contact": {c.value for c in self.contacts},
        }
        for rule in self.rules:
            for field, value in rule.conditions:
                if field not in RULE_FIELDS:
                    raise InvalidConfigError(f"{rule.rule_id}: unknown field {field!r}")
                if value not in vocab[field]:
                    raise InvalidConfigError(
                        f"{rule.rule_id}: {field}={value!r} is not declared"
                    )


@dataclass(frozen=True)
class GenReport:
    """Ground truth for one generated log, in record order."""

    class_tally: dict[BehaviorClass, int]  # post-flip, sums to n_records
    rule_ids: tuple[str, ...]
    true_classes: tuple[BehaviorClass, ...]  # pre-flip rule labels
    emitted_classes: tuple[BehaviorClass, ...]
    n_flips: int


def _cumulative(weights: Sequence[float]) -> list[float]:
    cum = []
    total = 0.0
    for w in weights:
        total += w
        cum.append(total)
    return cum


def _pick(rng, cum: list[float]) -> int:
    return bisect_right(cum, rng.random() * cum[-1])


def generate(rules: PlantedRuleSet) -> tuple[list[CallRecord], GenReport]:
    """Sample records and their ground truth; deterministic in the seed."""
    rng = make_rng(mix64(rules.seed, 0))
    slot_cum = _cumulative([s.weight for s in rules.slots])
    loc_cum = _cumulative([loc.weight for loc in rules.locations])
    con_cum = _cumulative([c.weight for c in rules.contacts])

    records: list[CallRecord] = []
    rule_ids: list[str] = []
    true_classes: list[BehaviorClass] = []
    emitted: list[BehaviorClass] = []
    tally = {cls: 0 for cls in BehaviorClass}
    flips = 0
    for _ in range(rules.n_records):
        slot = rules.slots[_pick(rng, slot_cum)]
        day = slot.days[int(rng.integers(len(slot.days)))]
        week = int(rng.integers(rules.n_weeks))
        minute = slot.start_minute + int(rng.integers(slot.end_minute - slot.start_minute))
        contact = rules.contacts[_pick(rng, con_cum)].value
        location = rules.locations[_pick(rng, loc_cum)].value

        ctx = {
            "segment": slot.slot_id,
            "day": DAY_LABELS[day],
            "location": location,
            "contact": contact,
        }
        rule_id, label = "default", rules.default_class
        for rule in rules.rules:
            if rule.matches(ctx):
                rule_id, label = rule.rule_id, rule.target
                break

        final = label
        if rules.noise > 0 and rng.random() < rules.noise:
            others = [c for c in BehaviorClass if c is not label]
            final = others[int(rng.integers(len(others)))]
            flips += 1

        if final is BehaviorClass.ACCEPT:
            call_type, duration = CallType.INCOMING, 10 + int(rng.integers(591))
        elif final is BehaviorClass.REJECT:
            call_type, duration = CallType.INCOMING, 0
        else:
            call_type, duration = CallType.MISSED, 0

        day_date = ANCHOR_MONDAY + timedelta(days=week * 7 + day)
        ts = datetime(day_date.year, day_date.month, day_date.day, minute // 60, minute % 60)
        records.append(CallRecord(ts, contact, call_type, duration, location))
        rule_ids.append(rule_id)
        true_classes.append(label)
        emitted.append(final)
        tally[final] += 1

    report = GenReport(tally, tuple(rule_ids), tuple(true_classes), tuple(emitted), flips)
    return records, report


def render_log(records: Sequence[CallRecord]) -> str:
    """Records in the ingest log format."""
    lines = ["timestamp,contact,call_type,duration,location"]
    for rec in records:
        lines.append(
            f"{rec.timestamp.isoformat(timespec='minutes')},{rec.contact_raw},"
            f"{rec.call_type.value},{rec.duration_s},{rec.location or ''}"
        )
    return "\n".join(lines) + "\n"


def render_truth(report: GenReport) -> str:
    """Ground-truth sidecar: one row per record."""
    lines = ["index,rule_id,true_class,emitted_class,flipped"]
    for i, (rule_id, true, emit) in enumerate(
        zip(report.rule_ids, report.true_classes, report.emitted_classes)
    ):
        lines.append(f"{i},{rule_id},{true.value},{emit.value},{int(true is not emit)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scenario files

def _parse_days(text: str) -> tuple[int, ...]:
    days: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            try:
                a, b = DAY_LABELS.index(lo), DAY_LABELS.index(hi)
            except ValueError:
                raise InvalidConfigError(f"unknown day in range {part!r}") from None
            if b < a:
                raise InvalidConfigError(f"day range {part!r} runs backwards")
            days.extend(range(a, b + 1))
        else:
            try:
                days.append(DAY_LABELS.index(part))
            except ValueError:
                raise InvalidConfigError(f"unknown day {part!r}") from None
    return tuple(dict.fromkeys(days))


def _parse_minute(text: str) -> int:
    try:
        hh, mm = text.split(":")
        return int(hh) * 60 + int(mm)
    except ValueError:
        raise InvalidConfigError(f"bad time {text!r}, expected HH:MM") from None


def _parse_class(word: str, line_no: int) -> BehaviorClass:
    try:
        return _CLASS_WORDS[word.lower()]
    except KeyError:
        raise InvalidConfigError(f"line {line_no}: unknown class {word!r}") from None


def parse_scenario(
    text: str, *, noise: float, n_records: int, seed: int, n_weeks: int = 36
) -> PlantedRuleSet:
    """Parse the line-based scenario syntax into a rule set."""
    slots: list[Slot] = []
    locations: list[WeightedValue] = []
    contacts: list[WeightedValue] = []
    rule_rows: list[Rule] = []
    default: Optional[BehaviorClass] = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0].upper()
        try:
            if keyword == "SEGMENT":
                name, opts = tokens[1], _options(tokens[2:])
                slots.append(
                    Slot(
                        name,
                        _parse_days(opts.pop("days")),
                        _parse_minute(opts.pop("start")),
                        _parse_minute(opts.pop("end")),
                        float(opts.pop("weight", 1.0)),
                    )
                )
                _reject_extras(opts)
            elif keyword == "LOCATION":
                name, opts = tokens[1], _options(tokens[2:])
                locations.append(WeightedValue(name, float(opts.pop("weight", 1.0))))
                _reject_extras(opts)
            elif keyword == "CONTACT":
                name, opts = tokens[1], _options(tokens[2:])
                contacts.append(WeightedValue(name, float(opts.pop("weight", 1.0))))
                _reject_extras(opts)
            elif keyword == "IF":
                rule_rows.append(_parse_rule(tokens, len(rule_rows) + 1, line_no))
            elif keyword == "DEFAULT":
                if len(tokens) != 2:
                    raise InvalidConfigError("DEFAULT takes exactly one class")
                default = _parse_class(tokens[1], line_no)
            else:
                raise InvalidConfigError(f"unknown statement {tokens[0]!r}")
        except (IndexError, KeyError):
            raise InvalidConfigError(f"line {line_no}: malformed {keyword} statement") from None
        except InvalidConfigError as exc:
            raise InvalidConfigError(f"line {line_no}: {exc}") from None

    if default is None:
        raise InvalidConfigError("scenario is missing a DEFAULT class")
    return PlantedRuleSet(
        tuple(rule_rows), default, noise, n_records, seed,
        tuple(slots), tuple(locations), tuple(contacts), n_weeks,
    )


def _options(tokens: Sequence[str]) -> dict[str, str]:
    opts = {}
    for tok in tokens:
        if "=" not in tok:
            raise InvalidConfigError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        opts[key.lower()] = value
    return opts


def _reject_extras(opts: dict[str, str]) -> None:
    if opts:
        raise InvalidConfigError(f"unknown options: {', '.join(sorted(opts))}")


def _parse_rule(tokens: list[str], index: int, line_no: int) -> Rule:
    try:
        then = tokens.index("THEN")
    except ValueError:
        raise InvalidConfigError("IF rule is missing THEN") from None
    if then != len(tokens) - 2:
        raise InvalidConfigError("THEN must be followed by exactly one class")
    conditions = []
    for i, tok in enumerate(tokens[1:then]):
        if i % 2 == 1:
            if tok.upper() != "AND":
                raise InvalidConfigError(f"expected AND, got {tok!r}")
            continue
        if "=" not in tok:
            raise InvalidConfigError(f"expected field=value, got {tok!r}")
        field, value = tok.split("=", 1)
        conditions.append((field.lower(), value))
    if not conditions:
        raise InvalidConfigError("IF rule has no conditions")
    return Rule(f"R{index}", tuple(conditions), _parse_class(tokens[-1], line_no))


def load_scenario(
    path: str | Path, *, noise: float, n_records: int, seed: int, n_weeks: int = 36
) -> PlantedRuleSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfigError(f"cannot read scenario: {exc}") from exc
    return parse_scenario(text, noise=noise, n_records=n_records, seed=seed, n_weeks=n_weeks)


def alice_scenario_text() -> str:
    """The bundled default scenario."""
    from importlib.resources import files

    return files("emiim").joinpath("scenarios/alice.rules").read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# random scenarios for stress evaluation

_WEEKDAY_WINDOWS = ((7, 9), (9, 10), (10, 12), (12, 14), (14, 18), (18, 22))
_WEEKEND_WINDOWS = ((9, 12), (12, 18), (18, 22))
_LOCATION_POOL = ("office", "home", "market", "campus", "gym", "cafe", "station", "library")


def random_ruleset(seed: int, *, n_records: int, noise: float, n_weeks: int = 36) -> PlantedRuleSet:
    """A randomized but well-formed scenario: hour-aligned slots, weighted
    contacts/locations, and 2..4 first-match rules over segment/contact/day."""
    rng = make_rng(mix64(seed, 0x5CE17))
    slots = []
    for i, (lo, hi) in enumerate(_WEEKDAY_WINDOWS):
        if rng.random() < 0.75:
            slots.append(
                Slot(f"W{i + 1}", tuple(range(5)), lo * 60, hi * 60, float(1 + int(rng.integers(6))))
            )
    for i, (lo, hi) in enumerate(_WEEKEND_WINDOWS):
        if rng.random() < 0.6:
            slots.append(
                Slot(f"E{i + 1}", (5, 6), lo * 60, hi * 60, float(1 + int(rng.integers(4))))
            )
    if len(slots) < 3:
        slots.append(Slot("W0", tuple(range(5)), 9 * 60, 17 * 60, 3.0))

    n_locations = 4 + int(rng.integers(4))
    locations = tuple(
        WeightedValue(loc, float(1 + int(rng.integers(5))))
        for loc in _LOCATION_POOL[:n_locations]
    )
    n_contacts = 8 + int(rng.integers(9))
    contacts = tuple(
        WeightedValue(f"+1555{i:04d}", max(1.0, 12.0 / (i + 1)))
        for i in range(n_contacts)
    )

    classes = list(BehaviorClass)
    rules = []
    n_rules = 2 + int(rng.integers(3))
    for r in range(n_rules):
        slot = slots[int(rng.integers(len(slots)))]
        conditions = [("segment", slot.slot_id)]
        extra = rng.random()
        if extra < 0.4:
            conditions.append(("contact", contacts[int(rng.integers(min(4, len(contacts))))].value))
        elif extra < 0.55:
            conditions.append(("day", DAY_LABELS[slot.days[int(rng.integers(len(slot.days)))]]))
        rules.append(Rule(f"R{r + 1}", tuple(conditions), classes[int(rng.integers(3))]))
    default = classes[int(rng.integers(3))]

    return PlantedRuleSet(
        tuple(rules), default, noise, n_records, seed,
        tuple(slots), locations, contacts, n_weeks,
    )
