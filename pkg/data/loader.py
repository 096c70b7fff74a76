"""
Read and write instance and result JSON files.
"""

import json

import numpy as np

from model.follower import DualSolution
from model.instance import Customer, Instance, Job, PriceVector, Schedule


def instance_to_dict(instance):
    return {
        "horizon": instance.horizon,
        "price_cap": [float(p) for p in instance.price_cap],
        "kappa": float(instance.kappa),
        "competitor_prices": None if instance.competitor_prices is None
        else [float(p) for p in instance.competitor_prices],
        "customers": [
            {
                "id": c.id,
                "lambda": float(c.lam),
                "jobs": [
                    {
                        "appliance": j.appliance_id,
                        "demand": float(j.demand),
                        "power_cap": float(j.power_cap),
                        "tw_begin": int(j.tw_begin),
                        "tw_end": int(j.tw_end),
                    }
                    for j in c.jobs
                ],
            }
            for c in instance.customers
        ],
    }


def instance_from_dict(d):
    customers = []
    for c in d["customers"]:
        cid = str(c["id"])
        jobs = tuple(
            Job(customer_id=cid, appliance_id=str(j["appliance"]), demand=float(j["demand"]),
                power_cap=float(j["power_cap"]), tw_begin=int(j["tw_begin"]), tw_end=int(j["tw_end"]))
            for j in c["jobs"]
        )
        customers.append(Customer(id=cid, lam=float(c["lambda"]), jobs=jobs))
    competitor = d.get("competitor_prices")
    return Instance(
        horizon=int(d["horizon"]),
        customers=tuple(customers),
        price_cap=tuple(float(p) for p in d["price_cap"]),
        kappa=float(d["kappa"]),
        competitor_prices=None if competitor is None else tuple(float(p) for p in competitor),
    )


def load_instance(filename):
    with open(filename) as infile:
        return instance_from_dict(json.load(infile))


def save_instance(instance, filename):
    with open(filename, 'w') as outfile:
        json.dump(instance_to_dict(instance), outfile, indent=2)
        outfile.write('\n')
    return filename


def _supply_to_list(instance, supply):
    out = []
    for job, _ in instance.jobs():
        out.append({
            "customer": job.customer_id,
            "appliance": job.appliance_id,
            "tw_begin": job.tw_begin,
            "values": [float(v) for v in supply[job.key]],
        })
    return out


def _supply_from_list(rows):
    return {(str(r["customer"]), str(r["appliance"])): np.asarray(r["values"], dtype=float) for r in rows}


def schedule_to_dict(instance, schedule):
    return {
        "x": _supply_to_list(instance, schedule.x),
        "x_bar": None if schedule.x_bar is None else _supply_to_list(instance, schedule.x_bar),
    }


def schedule_from_dict(d):
    x_bar = d.get("x_bar")
    return Schedule(x=_supply_from_list(d["x"]), x_bar=None if x_bar is None else _supply_from_list(x_bar))


def duals_to_dict(instance, duals):
    if duals is None:
        return None
    return {
        "w": _supply_to_list(instance, duals.w),
        "v": [{"customer": job.customer_id, "appliance": job.appliance_id, "value": float(duals.v[job.key])}
              for job, _ in instance.jobs()],
    }


def duals_from_dict(d):
    if d is None:
        return None
    v = {(str(r["customer"]), str(r["appliance"])): float(r["value"]) for r in d["v"]}
    return DualSolution(w=_supply_from_list(d["w"]), v=v)


def prices_from_list(values):
    return PriceVector(np.asarray(values, dtype=float))


def save_result(result, filename):
    with open(filename, 'w') as outfile:
        json.dump(result, outfile, indent=2)
        outfile.write('\n')
    return filename


def load_result(filename):
    with open(filename) as infile:
        return json.load(infile)
