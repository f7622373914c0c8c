"""Central term of the normalized gl(1) Sugawara operators on the charge-0 fermions."""

from kncasimir.fock import FockConfig
from kncasimir.sugawara import sugawara_config, virasoro_defect

cfg = sugawara_config("gl1", FockConfig(1, 0, (), 12))
print(f"measured level c = {cfg.level}, kappa = {cfg.kappa}")
print(" k   defect   k^3-k   defect/(k^3-k)")
for k in range(1, 5):
    rep = virasoro_defect(cfg, k, -k)
    ratio = rep["ratio"] if rep["ratio"] is not None else "-"
    print(f"{k:2d}  {str(rep['value']):>7}  {str(rep['vector_cocycle']):>6}  {ratio}")
print("off the diagonal:", {(k, m): str(virasoro_defect(cfg, k, m)["value"]) for k, m in ((2, -1), (3, 1), (1, 1))})
