from .displacement import DisplacementField, StrainField, cell_gradients, strain
from .rescaling import RescaledField, change_of_variables, rescale, rescale_matrices, thin_grid
from .storage import load_field, save_field

__all__ = [
    "DisplacementField",
    "RescaledField",
    "StrainField",
    "cell_gradients",
    "change_of_variables",
    "load_field",
    "rescale",
    "rescale_matrices",
    "save_field",
    "strain",
    "thin_grid",
]
