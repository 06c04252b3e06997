from django.apps import AppConfig


class GraphAgentsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'graph_agents'
    verbose_name = 'AgentNet graph agents'
