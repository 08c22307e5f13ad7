"""Minimal estimator base following the scikit-learn parameter protocol.

Estimators store their constructor arguments verbatim, expose them through
``get_params``/``set_params``, and put everything learned by ``fit`` in
trailing-underscore attributes. This keeps them compatible with
``sklearn.clone`` and pipeline tooling without a scikit-learn dependency.
"""

from __future__ import annotations

import inspect

from .errors import NotFittedError


class BaseEstimator:
    @classmethod
    def _get_param_names(cls):
        sig = inspect.signature(cls.__init__)
        return sorted(
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        )

    def get_params(self, deep: bool = True) -> dict:
        """Parameters of this estimator as a name -> value mapping."""
        return {name: getattr(self, name) for name in self._get_param_names()}

    def set_params(self, **params):
        """Set estimator parameters; unknown names raise ValueError."""
        valid = set(self._get_param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def _check_fitted(self, attribute: str):
        if not hasattr(self, attribute):
            raise NotFittedError(
                f"{type(self).__name__} instance is not fitted yet; call fit() first"
            )

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({params})"
