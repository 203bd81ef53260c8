import json
import requests
from typing import *
from langchain_core.tools import tool

@tool
def deleteCoreV1NamespacedLimitRange(namespace: str, name: str, dryRun: Optional[str] = None, gracePeriodSeconds: Optional[int] = None, orphanDependents: Optional[bool] = None, propagationPolicy: Optional[str] = None, requestBody: Optional[dict] = None):
	""" Deletes a specified LimitRange within a given namespace. This operation allows for optional parameters to control the deletion process, such as specifying a grace period before deletion, determining whether dependent objects should be orphaned, and setting a propagation policy for garbage collection. Additionally, a dry run option is available to simulate the deletion without persisting any changes.
	"""

	header = {
		'accept': 'application/json',
		'content-type': 'application/x-www-form-urlencoded'
	}
	queryParam = {'dryRun' : dryRun, 'gracePeriodSeconds' : gracePeriodSeconds, 'orphanDependents' : orphanDependents, 'propagationPolicy' : propagationPolicy}

	api_url = f"http://xxxx:8080/api/v1/namespaces/{namespace}/limitranges/{name}"
	response = requests.delete(api_url, headers=header, params=queryParam, json=requestBody)
	try:
		payload = response.json()
	except ValueError:
		payload = response.text
	return {"status_code": response.status_code, "response": payload}
