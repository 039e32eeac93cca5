from autograd.tensor import Tape, Tensor, as_tensor, current_tape
from autograd.gradcheck import grad_check, grad_check_params

__all__ = ["Tape", "Tensor", "as_tensor", "current_tape", "grad_check", "grad_check_params"]
