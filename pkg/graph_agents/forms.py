"""
Graph Agents Forms Module

This module contains the Django forms that validate experiment configuration
files and command flags before any work starts. A config is checked section
by section (dataset, model, training) and every failure is collected into a
single ConfigError whose details carry the form's error map.
"""

from django import forms

from .datasets import DATASET_FAMILIES
from .exceptions import ConfigError
from .model import VARIANTS


def validated(form_class, data, section):
    """
    Run a form over a plain dict.

    params:
        form_class: Form to validate with
        data: Raw values
        section: Config section name for the error report

    returns:
        The form's cleaned_data

    raises:
        ConfigError: If the form is invalid
    """
    form = form_class(data=data)
    if not form.is_valid():
        errors = {field: [str(e) for e in errs] for field, errs in form.errors.items()}
        raise ConfigError(f"Invalid {section} configuration", {section: errors})
    return form.cleaned_data


class DatasetSpecForm(forms.Form):
    """
    params:
        family: Synthetic dataset family
        params: Generator keyword arguments
        seed: Generator seed
        test_fraction: Share of groups held out for testing
    """

    family = forms.ChoiceField(choices=[(f, f) for f in DATASET_FAMILIES])
    params = forms.JSONField(required=False)
    seed = forms.IntegerField(min_value=0)
    test_fraction = forms.FloatField(min_value=0.0, max_value=1.0)

    def clean_params(self):
        params = self.cleaned_data.get('params')
        if params is None:
            return {}
        if not isinstance(params, dict):
            raise forms.ValidationError("Dataset params must be a JSON object.")
        return params


class ModelConfigForm(forms.Form):
    variant = forms.ChoiceField(choices=[(v, v) for v in VARIANTS])
    agents = forms.IntegerField(min_value=1)
    steps = forms.IntegerField(min_value=1)
    hidden = forms.IntegerField(min_value=2)
    class_count = forms.IntegerField(min_value=1)
    feature_dim = forms.IntegerField(min_value=1)
    temperature = forms.FloatField()
    exploration_decay = forms.FloatField(min_value=0.0, max_value=1.0)
    disable_node_update = forms.BooleanField(required=False)
    disable_neighborhood_update = forms.BooleanField(required=False)
    neighborhood_update_for_all = forms.BooleanField(required=False)
    global_agent_communication = forms.BooleanField(required=False)
    exploration_bias = forms.BooleanField(required=False)
    stochastic_eval = forms.BooleanField(required=False)
    dtype = forms.ChoiceField(choices=[('float64', 'float64'), ('float32', 'float32')])

    def clean_hidden(self):
        hidden = self.cleaned_data.get('hidden')
        if hidden is not None and hidden % 2:
            raise forms.ValidationError("Hidden width must be even (time embedding).")
        return hidden

    def clean_temperature(self):
        temperature = self.cleaned_data.get('temperature')
        if temperature is not None and temperature <= 0:
            raise forms.ValidationError("Temperature must be positive.")
        return temperature

    def clean(self):
        cleaned = super().clean()
        if cleaned.get('neighborhood_update_for_all'):
            if not cleaned.get('disable_node_update'):
                raise forms.ValidationError("neighborhood_update_for_all requires disable_node_update.")
            if cleaned.get('disable_neighborhood_update'):
                raise forms.ValidationError("neighborhood_update_for_all contradicts disable_neighborhood_update.")
        return cleaned


class TrainingConfigForm(forms.Form):
    """
    Training recipe and experiment bookkeeping.

    params:
        seeds: Non-empty list of non-negative seeds
        grid: Mapping of override path -> list of values; empty for a single cell
    """

    name = forms.CharField(max_length=200)
    batch_size = forms.IntegerField(min_value=1)
    training_steps = forms.IntegerField(min_value=0)
    seeds = forms.JSONField()
    lr = forms.FloatField(min_value=0.0)
    lr_end = forms.FloatField(min_value=0.0)
    weight_decay = forms.FloatField(min_value=0.0)
    eval_every = forms.IntegerField(min_value=1)
    eval_rollouts = forms.IntegerField(min_value=1)
    early_stop_patience = forms.IntegerField(min_value=0)
    grid = forms.JSONField(required=False)

    def clean_seeds(self):
        seeds = self.cleaned_data.get('seeds')
        if not isinstance(seeds, list) or not seeds:
            raise forms.ValidationError("Seeds must be a non-empty list.")
        if any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in seeds):
            raise forms.ValidationError("Seeds must be non-negative integers.")
        return seeds

    def clean_grid(self):
        grid = self.cleaned_data.get('grid')
        if grid is None:
            return {}
        if not isinstance(grid, dict):
            raise forms.ValidationError("Grid must be a JSON object of axis -> values.")
        for axis, values in grid.items():
            if not isinstance(values, list) or not values:
                raise forms.ValidationError(f"Grid axis '{axis}' needs a non-empty list of values.")
        return grid


class RunFlagsForm(forms.Form):
    """Flags shared by every experiment command."""

    seed = forms.IntegerField(min_value=0)
    workers = forms.IntegerField(min_value=1)
    out = forms.CharField()

    def clean_out(self):
        out = self.cleaned_data.get('out')
        if not out or not out.strip():
            raise forms.ValidationError("Output directory must not be empty.")
        return out.strip()
